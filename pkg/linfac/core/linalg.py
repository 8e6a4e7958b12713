"""
Rank-Aware Linear Algebra.

This module provides the dense linear algebra every other module is built on:
- SVD-based Moore-Penrose pseudoinverse and numerical rank
- Orthogonal projectors, image and kernel bases
- Subspace membership and trivial-intersection predicates
- Symmetric root of the pseudoinverse of a PSD matrix

All rank decisions go through the singular value decomposition and a single
Tolerance value, so that every condition check downstream is comparable.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

logger = logging.getLogger(__name__)


class LinalgError(Exception):
    """Base exception for linear algebra errors."""

    pass


class NonFiniteError(LinalgError):
    """Raised when a matrix contains NaN or Inf entries."""

    pass


class DimensionError(LinalgError):
    """Raised when operand shapes do not conform."""

    pass


class NotPSDError(LinalgError):
    """Raised when a matrix is materially asymmetric or indefinite."""

    pass


@dataclass(frozen=True)
class Tolerance:
    """
    Numerical tolerance policy shared by all operations.

    Attributes:
        rel_rank_tol: Singular values below rel_rank_tol * sigma_max count as zero
        abs_residual_tol: Threshold for relative equality and membership residuals
    """

    rel_rank_tol: float = 1e-10
    abs_residual_tol: float = 1e-8

    def __post_init__(self):
        if not self.rel_rank_tol > 0 or not self.abs_residual_tol > 0:
            raise LinalgError(
                f"Tolerances must be strictly positive, got "
                f"rel_rank_tol={self.rel_rank_tol}, abs_residual_tol={self.abs_residual_tol}"
            )
        if self.rel_rank_tol >= 1:
            raise LinalgError(f"rel_rank_tol must be < 1, got {self.rel_rank_tol}")


DEFAULT_TOLERANCE = Tolerance()


class Check(NamedTuple):
    """Outcome of a tolerance test: the verdict and the relative residual behind it."""

    holds: bool
    residual: float


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """
    Orthonormal basis of a subspace of R^ambient_dim.

    Attributes:
        basis: ambient_dim x k matrix with orthonormal columns (k may be 0)
        ambient_dim: Dimension of the surrounding space
    """

    basis: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        if self.basis.ndim != 2 or self.basis.shape[0] != self.ambient_dim:
            raise DimensionError(
                f"Basis of shape {self.basis.shape} does not live in R^{self.ambient_dim}"
            )

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the spanned subspace."""
        return self.basis @ self.basis.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """
    Coerce input to a finite 2-D float array.

    Raises:
        NonFiniteError: If any entry is NaN or Inf
        DimensionError: If the input is not two-dimensional
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce input to a finite 1-D float array (column matrices are flattened)."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def _svd(A: np.ndarray, full: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if A.size == 0:
        rows, cols = A.shape
        k = min(rows, cols)
        u = np.eye(rows) if full else np.eye(rows, k)
        vh = np.eye(cols) if full else np.eye(k, cols)
        return u, np.zeros(k), vh
    return sla.svd(A, full_matrices=full, lapack_driver="gesvd")


def _cutoff(s: np.ndarray, tol: Tolerance, scale: float | None, floor: float = 0.0) -> float:
    smax = float(s[0]) if s.size else 0.0
    return max(tol.rel_rank_tol * max(smax, scale or 0.0), floor)


def _numerical_rank(s: np.ndarray, tol: Tolerance, scale: float | None, floor: float = 0.0) -> int:
    return int(np.count_nonzero(s > _cutoff(s, tol, scale, floor)))


def pinv(A, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse via SVD.

    Singular values at or below rel_rank_tol * sigma_max are treated as zero,
    so A+ satisfies the four Penrose conditions within tolerance for every
    rank profile, including the zero matrix.

    Args:
        A: Matrix to invert
        tol: Tolerance policy

    Returns:
        The pseudoinverse, of shape A.T.shape

    Raises:
        NonFiniteError: If A has non-finite entries
    """
    A = as_matrix(A, "A")
    u, s, vh = _svd(A)
    r = _numerical_rank(s, tol, None)
    return (vh[:r].T / s[:r]) @ u[:, :r].T


def rank_of(
    A, tol: Tolerance = DEFAULT_TOLERANCE, scale: float | None = None, floor: float = 0.0
) -> int:
    """
    Numerical rank: number of singular values above rel_rank_tol * max(sigma_max, scale).

    The optional scale lets a derived matrix be judged against the operand it
    was computed from, so rounding residue is not mistaken for rank. Singular
    values at or below the absolute floor never count.
    """
    A = as_matrix(A, "A")
    _, s, _ = _svd(A)
    return _numerical_rank(s, tol, scale, floor)


def image_basis(A, tol: Tolerance = DEFAULT_TOLERANCE, scale: float | None = None) -> SubspaceBasis:
    """Orthonormal basis of Im A, ordered by decreasing singular value."""
    A = as_matrix(A, "A")
    u, s, _ = _svd(A)
    r = _numerical_rank(s, tol, scale)
    return SubspaceBasis(_normalize_signs(u[:, :r]), A.shape[0])


def kernel_basis(
    A, tol: Tolerance = DEFAULT_TOLERANCE, scale: float | None = None, floor: float = 0.0
) -> SubspaceBasis:
    """
    Orthonormal basis of ker A, taken from the trailing right singular vectors.

    Column signs are normalized so the largest-magnitude entry of each column
    is positive, which makes the basis deterministic for a given input.
    """
    A = as_matrix(A, "A")
    _, s, vh = _svd(A, full=True)
    r = _numerical_rank(s, tol, scale, floor)
    return SubspaceBasis(_normalize_signs(vh[r:].T.copy()), A.shape[1])


def _normalize_signs(basis: np.ndarray) -> np.ndarray:
    if basis.shape[1] == 0:
        return basis
    pivots = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[pivots, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def image_projector(A, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """
    Orthogonal projector A A+ onto Im A.

    Built as U_r U_r^T from the leading left singular vectors, which equals
    A A+ and is exactly symmetric.
    """
    A = as_matrix(A, "A")
    u, s, _ = _svd(A)
    r = _numerical_rank(s, tol, None)
    return u[:, :r] @ u[:, :r].T


def complement_projector(A, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Orthogonal projector I - A A+ onto (Im A)^perp = ker A^T."""
    A = as_matrix(A, "A")
    return np.eye(A.shape[0]) - image_projector(A, tol)


def in_image(v, A, tol: Tolerance = DEFAULT_TOLERANCE) -> Check:
    """
    Test whether v lies in Im A.

    The residual ||A A+ v - v|| / max(1, ||v||) is always reported.

    Raises:
        DimensionError: If len(v) differs from the row count of A
    """
    v = as_vector(v, "v")
    A = as_matrix(A, "A")
    if A.shape[0] != v.shape[0]:
        raise DimensionError(f"Vector of length {v.shape[0]} vs matrix with {A.shape[0]} rows")
    miss = image_projector(A, tol) @ v - v
    residual = float(np.linalg.norm(miss)) / max(1.0, float(np.linalg.norm(v)))
    return Check(residual <= tol.abs_residual_tol, residual)


def trivial_intersection(im_a, ker_b_of, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """
    Test Im A ∩ ker B = {0}.

    Uses dim B(Im A) = rank A - dim(Im A ∩ ker B): the intersection is trivial
    exactly when rank(B A) = rank(A).

    Args:
        im_a: Matrix A whose image is intersected
        ker_b_of: Matrix B whose kernel is intersected

    Raises:
        DimensionError: If B's column count differs from A's row count
    """
    A = as_matrix(im_a, "im_a")
    B = as_matrix(ker_b_of, "ker_b_of")
    if B.shape[1] != A.shape[0]:
        raise DimensionError(
            f"ker_b_of acts on R^{B.shape[1]} but im_a lives in R^{A.shape[0]}"
        )
    scale = float(np.linalg.norm(B, 2) * np.linalg.norm(A, 2)) if A.size and B.size else 0.0
    return rank_of(B @ A, tol, scale=scale) == rank_of(A, tol)


def symmetrize(S, tol: Tolerance = DEFAULT_TOLERANCE, name: str = "matrix") -> np.ndarray:
    """
    Return (S + S^T) / 2, refusing materially asymmetric input.

    Raises:
        NotPSDError: If ||S - S^T|| exceeds abs_residual_tol * max(1, ||S||)
        DimensionError: If S is not square
    """
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {S.shape}")
    asym = float(np.linalg.norm(S - S.T))
    if asym > tol.abs_residual_tol * max(1.0, float(np.linalg.norm(S))):
        raise NotPSDError(f"{name} is not symmetric (asymmetry residual {asym:.3e})")
    return (S + S.T) / 2


def clip_psd(S, tol: Tolerance = DEFAULT_TOLERANCE, name: str = "matrix") -> np.ndarray:
    """
    Symmetrize S and clip eigenvalues in the rounding band [-tol, 0) to zero.

    The matrix is rebuilt from its eigendecomposition only when clipping is
    actually needed; otherwise the symmetrized input is returned untouched.

    Raises:
        NotPSDError: If S is asymmetric or has an eigenvalue below the band
    """
    S = symmetrize(S, tol, name)
    if S.size == 0:
        return S
    w, v = sla.eigh(S)
    band = tol.abs_residual_tol * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -band:
        raise NotPSDError(f"{name} has eigenvalue {w[0]:.3e} below -{band:.1e}")
    if w[0] < 0:
        logger.debug("Clipping %d slightly negative eigenvalue(s) of %s", int(np.sum(w < 0)), name)
        warnings.warn(
            f"{name}: eigenvalues down to {w[0]:.3e} clipped to zero",
            RuntimeWarning,
            stacklevel=2,
        )
        return (v * np.clip(w, 0.0, None)) @ v.T
    return S


def psd_root_of_pinv(S, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """
    Symmetric PSD matrix U with U^T U = S+.

    Built from the eigendecomposition of S by taking reciprocal square roots
    of the retained eigenvalues; eigenvalues at or below rel_rank_tol * lambda_max
    map to zero.

    Raises:
        NotPSDError: If S is materially asymmetric or indefinite
    """
    S = clip_psd(S, tol, "S")
    if S.size == 0:
        return S
    w, v = sla.eigh(S)
    keep = w > tol.rel_rank_tol * max(float(w[-1]), 0.0)
    vk = v[:, keep]
    return (vk / np.sqrt(w[keep])) @ vk.T


def matrices_equal(A, B, tol: Tolerance = DEFAULT_TOLERANCE) -> Check:
    """
    Equality test ||A - B||_F <= tol * max(1, ||A||_F, ||B||_F).

    The reported residual is the unscaled ||A - B||_F; only the threshold is
    relative. Vectors are compared as column matrices.

    Raises:
        DimensionError: If the shapes differ
    """
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    if A.shape != B.shape:
        raise DimensionError(f"Shape mismatch: {A.shape} vs {B.shape}")
    diff = float(np.linalg.norm(A - B))
    bound = tol.abs_residual_tol * max(1.0, float(np.linalg.norm(A)), float(np.linalg.norm(B)))
    return Check(diff <= bound, diff)

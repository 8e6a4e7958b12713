"""
Tradable Factor Builders.

This module constructs factor weight matrices W (factors f = W^T x):
- OLS weights W^T = Phi+
- GLS weights W^T = (S Phi)+ S with S^T S = Sigma_eps+
- The general form W^T = R (S Phi R)+ S with post-hoc verification
- GLS-type weights of the generative model, using an invertible extension
  of the root U of Sigma_eta+

No builder requires rank(Phi) = m; every path goes through the pseudoinverse.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from linfac.core.linalg import (
    DEFAULT_TOLERANCE,
    Check,
    DimensionError,
    Tolerance,
    as_matrix,
    as_vector,
    image_projector,
    kernel_basis,
    matrices_equal,
    pinv,
    psd_root_of_pinv,
    rank_of,
    trivial_intersection,
)
from linfac.core.model import Characteristics, FactorWeights

if TYPE_CHECKING:
    from linfac.factors.generative import GenerativeSpec

logger = logging.getLogger(__name__)


class BuilderError(Exception):
    """Base exception for weight builder errors."""

    pass


class RecipeKind(str, Enum):
    """How a weight matrix is derived from the characteristics."""

    OLS = "ols"
    GLS = "gls"
    GENERAL_FORM = "general_form"
    GLS_TYPE_GENERATIVE = "gls_type_generative"


@dataclass(frozen=True, eq=False)
class WeightRecipe:
    """
    Recipe for deriving factor weights instead of supplying them.

    Attributes:
        kind: Recipe kind
        r: m x m matrix R (general form only)
        s: n x n matrix S (general form only)
        sigma_eps: n x n residual covariance whose pseudoinverse root gives S (GLS only)
    """

    kind: RecipeKind
    r: np.ndarray | None = None
    s: np.ndarray | None = None
    sigma_eps: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RecipeKind(self.kind))
        if self.kind is RecipeKind.GENERAL_FORM and (self.r is None or self.s is None):
            raise BuilderError("general_form recipe requires both r and s")
        if self.kind is RecipeKind.GLS and self.sigma_eps is None:
            raise BuilderError("gls recipe requires sigma_eps")


@dataclass(frozen=True, eq=False)
class GeneralFormReport:
    """
    Post-hoc checks on W^T = R (S Phi R)+ S.

    Attributes:
        idempotent: W^T Phi W^T = W^T
        intersection_trivial: Im(Phi R) ∩ ker S = {0}
        image_preserved: Im(Phi W^T) = Im(Phi R), checked only when the intersection is trivial
    """

    idempotent: Check
    intersection_trivial: bool
    image_preserved: Check | None


@dataclass(frozen=True, eq=False)
class GLSTypeDiagnostics:
    """
    Intermediate matrices and checks of the GLS-type construction.

    Attributes:
        u: Symmetric root with U^T U = Sigma_eta+
        s: Invertible extension of U
        s_rank: Numerical rank of S (equals n)
        projector_idempotent: (Phi W^T)^2 = Phi W^T
        projector_image: Im(Phi W^T) = Im Phi
        whitening: S Sigma_eta S^T = U U+
    """

    u: np.ndarray
    s: np.ndarray
    s_rank: int
    projector_idempotent: Check
    projector_image: Check
    whitening: Check

    @property
    def passed(self) -> bool:
        return (
            self.s_rank == self.s.shape[0]
            and self.projector_idempotent.holds
            and self.projector_image.holds
            and self.whitening.holds
        )


def build_ols(phi: Characteristics, tol: Tolerance = DEFAULT_TOLERANCE) -> FactorWeights:
    """
    OLS factor weights, W^T = Phi+.

    Phi W^T is then the orthogonal projector onto Im Phi, and f = Phi+ x is
    the minimal-norm cross-sectional least-squares solution.
    """
    return FactorWeights(pinv(phi.phi, tol).T)


def ols_solution_family(
    phi: Characteristics, x, z, tol: Tolerance = DEFAULT_TOLERANCE
) -> np.ndarray:
    """
    Member f = Phi+ x + (I - Phi+ Phi) z of the OLS solution set.

    z = 0 gives the minimal-norm member returned by build_ols.
    """
    xv = as_vector(x, "x")
    zv = as_vector(z, "z")
    if xv.shape[0] != phi.n or zv.shape[0] != phi.m:
        raise DimensionError(f"x must have {phi.n} entries and z {phi.m}")
    phi_pinv = pinv(phi.phi, tol)
    return phi_pinv @ xv + (np.eye(phi.m) - phi_pinv @ phi.phi) @ zv


def build_gls(
    phi: Characteristics, sigma_eps, tol: Tolerance = DEFAULT_TOLERANCE
) -> FactorWeights:
    """
    GLS factor weights, W^T = (S Phi)+ S with S the symmetric root of Sigma_eps+.

    The factors minimize the Mahalanobis residual length under Sigma_eps+.

    Raises:
        NotPSDError: If sigma_eps is not symmetric PSD
        DimensionError: If sigma_eps is not n x n
    """
    sigma_eps = as_matrix(sigma_eps, "sigma_eps")
    if sigma_eps.shape != (phi.n, phi.n):
        raise DimensionError(f"sigma_eps has shape {sigma_eps.shape}, expected ({phi.n}, {phi.n})")
    S = psd_root_of_pinv(sigma_eps, tol)
    return FactorWeights((pinv(S @ phi.phi, tol) @ S).T)


def verify_general_form(
    phi: Characteristics, r, s, w: FactorWeights, tol: Tolerance = DEFAULT_TOLERANCE
) -> GeneralFormReport:
    """Check idempotency and, when Im(Phi R) ∩ ker S = {0}, image preservation."""
    R = as_matrix(r, "r")
    S = as_matrix(s, "s")
    Wt = w.w.T
    idempotent = matrices_equal(Wt @ phi.phi @ Wt, Wt, tol)
    phi_r = phi.phi @ R
    trivial = trivial_intersection(phi_r, S, tol)
    image = None
    if trivial:
        image = matrices_equal(
            image_projector(phi.phi @ Wt, tol), image_projector(phi_r, tol), tol
        )
    return GeneralFormReport(idempotent, trivial, image)


def build_general_form(
    phi: Characteristics, r, s, tol: Tolerance = DEFAULT_TOLERANCE
) -> FactorWeights:
    """
    Weights of the general form W^T = R (S Phi R)+ S.

    OLS is R = I, S = I; GLS is R = I, S^T S = Sigma_eps+; an invertible R
    gives rotated GLS factors. The output is verified to satisfy
    W^T Phi W^T = W^T, and a failed check is reported as a RuntimeWarning.

    Raises:
        DimensionError: If r is not m x m or s is not n x n
    """
    R = as_matrix(r, "r")
    S = as_matrix(s, "s")
    if R.shape != (phi.m, phi.m):
        raise DimensionError(f"r has shape {R.shape}, expected ({phi.m}, {phi.m})")
    if S.shape != (phi.n, phi.n):
        raise DimensionError(f"s has shape {S.shape}, expected ({phi.n}, {phi.n})")

    w = FactorWeights((R @ pinv(S @ phi.phi @ R, tol) @ S).T)
    report = verify_general_form(phi, R, S, w, tol)
    if not report.idempotent.holds:
        warnings.warn(
            f"general-form weights miss W^T Phi W^T = W^T (residual {report.idempotent.residual:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    if report.image_preserved is not None and not report.image_preserved.holds:
        warnings.warn(
            f"general-form weights change Im(Phi R) (residual {report.image_preserved.residual:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return w


def extend_to_invertible(u, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """
    Invertible extension S of a square matrix U.

    S = U + Z Xi^T where Xi and Z are orthonormal bases of ker U and ker U^T.
    Hence S = U on Im U^T, S^T = U^T on Im U, and S maps ker U bijectively
    onto ker U^T. S = U when U is invertible; for U = 0 the two kernel bases
    coincide and S = I.

    Raises:
        DimensionError: If u is not square
    """
    U = as_matrix(u, "u")
    if U.shape[0] != U.shape[1]:
        raise DimensionError(f"u must be square, got shape {U.shape}")
    xi = kernel_basis(U, tol).basis
    if xi.shape[1] == 0:
        return U.copy()
    z = kernel_basis(U.T, tol).basis
    if z.shape[1] != xi.shape[1]:
        raise BuilderError(
            f"kernel dimensions of U ({xi.shape[1]}) and U^T ({z.shape[1]}) disagree"
        )
    logger.debug("Extending U of rank %d to invertible S", U.shape[0] - xi.shape[1])
    return U + z @ xi.T


def gls_type_transform(sigma_eta, tol: Tolerance = DEFAULT_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """Return (U, S): the symmetric root of Sigma_eta+ and its invertible extension."""
    U = psd_root_of_pinv(sigma_eta, tol)
    return U, extend_to_invertible(U, tol)


def build_gls_type_generative(
    spec: GenerativeSpec, tol: Tolerance = DEFAULT_TOLERANCE
) -> tuple[FactorWeights, GLSTypeDiagnostics]:
    """
    GLS-type weights W^T = (S Phi)+ S of a generative model.

    Diagnostics confirm that Phi (S Phi)+ S is a (generally non-orthogonal)
    projection onto Im Phi and that S Sigma_eta S^T is the orthogonal
    projector U U+.

    Raises:
        GenerativeSpecError: If the spec is invalid
    """
    spec.validate(tol)
    phi = spec.phi.phi
    U, S = gls_type_transform(spec.sigma_eta, tol)
    Wt = pinv(S @ phi, tol) @ S
    P = phi @ Wt

    diagnostics = GLSTypeDiagnostics(
        u=U,
        s=S,
        s_rank=rank_of(S, tol),
        projector_idempotent=matrices_equal(P @ P, P, tol),
        projector_image=matrices_equal(image_projector(P, tol), image_projector(phi, tol), tol),
        whitening=matrices_equal(S @ spec.sigma_eta @ S.T, image_projector(U, tol), tol),
    )
    if not diagnostics.passed:
        logger.warning("GLS-type construction failed its projector checks: %s", diagnostics)
    return FactorWeights(Wt.T), diagnostics


def build_from_recipe(
    recipe: WeightRecipe,
    phi: Characteristics,
    spec: GenerativeSpec | None = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> FactorWeights:
    """
    Dispatch a WeightRecipe to its builder.

    Raises:
        BuilderError: If a generative recipe comes without a spec
    """
    if recipe.kind is RecipeKind.OLS:
        return build_ols(phi, tol)
    if recipe.kind is RecipeKind.GLS:
        return build_gls(phi, recipe.sigma_eps, tol)
    if recipe.kind is RecipeKind.GENERAL_FORM:
        return build_general_form(phi, recipe.r, recipe.s, tol)
    if spec is None:
        raise BuilderError("gls_type_generative recipe requires a generative spec")
    weights, _ = build_gls_type_generative(spec, tol)
    return weights

"""
Cross-Section Model.

This module provides the value types for one date of an unbalanced panel and
the moment algebra implied by tradable factors f = W^T x:
- CrossSectionMoments, Characteristics, FactorWeights, ReturnSample
- FactorModelMoments derived from (mu, Sigma, Phi, W)
- Realized factors and residuals for a single return draw
- Report-only validation of a cross-section
- PanelSequence holding per-date records with varying asset counts
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg as sla

from linfac.core.linalg import DEFAULT_TOLERANCE, NonFiniteError, Tolerance, clip_psd

if TYPE_CHECKING:
    from linfac.factors.builders import WeightRecipe
    from linfac.factors.generative import GenerativeSpec

logger = logging.getLogger(__name__)


class ModelError(Exception):
    """Base exception for cross-section model errors."""

    pass


class ShapeError(ModelError):
    """Raised when the blocks of a cross-section do not conform."""

    pass


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if ndim == 1 and arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CrossSectionMoments:
    """
    Population mean and covariance of one date's excess returns.

    Attributes:
        mu: n-vector of expected excess returns
        sigma: n x n covariance matrix
        date_label: Opaque identifier of the date
    """

    mu: np.ndarray
    sigma: np.ndarray
    date_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen_array(self.mu, 1, "mu"))
        object.__setattr__(self, "sigma", _frozen_array(self.sigma, 2, "sigma"))
        object.__setattr__(self, "date_label", str(self.date_label))

    @property
    def n(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True, eq=False)
class Characteristics:
    """
    The n x m characteristics matrix Phi observable at the start of the period.

    No rank requirement is imposed; rank may be below m and m may exceed n.
    """

    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen_array(self.phi, 2, "phi"))

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def m(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True, eq=False)
class FactorWeights:
    """The n x m portfolio weight matrix W defining tradable factors f = W^T x."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen_array(self.w, 2, "w"))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def m(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True, eq=False)
class ReturnSample:
    """One realized vector of excess returns."""

    x: np.ndarray
    date_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen_array(self.x, 1, "x"))


@dataclass(frozen=True, eq=False)
class FactorModelMoments:
    """
    Moments implied by tradable factors for a (mu, Sigma, Phi, W) cross-section.

    Attributes:
        mu_f: Factor means W^T mu
        sigma_f: Factor covariance W^T Sigma W
        cross_xf: Covariance of returns with factors, Sigma W
        mu_eps: Residual means (I - Phi W^T) mu
        sigma_eps: Residual covariance (I - Phi W^T) Sigma (I - Phi W^T)^T
        cross_spanned_eps: cov(Phi f, eps) = Phi W^T Sigma (I - W Phi^T)
    """

    mu_f: np.ndarray
    sigma_f: np.ndarray
    cross_xf: np.ndarray
    mu_eps: np.ndarray
    sigma_eps: np.ndarray
    cross_spanned_eps: np.ndarray


def _conform(moments: CrossSectionMoments, phi: Characteristics, w: FactorWeights) -> None:
    n = moments.n
    if moments.sigma.shape != (n, n):
        raise ShapeError(f"sigma has shape {moments.sigma.shape}, expected ({n}, {n})")
    if phi.n != n:
        raise ShapeError(f"phi has {phi.n} rows, expected {n}")
    if w.w.shape != phi.phi.shape:
        raise ShapeError(f"w has shape {w.w.shape}, expected {phi.phi.shape}")
    for name, arr in (("mu", moments.mu), ("phi", phi.phi), ("w", w.w)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"{name} contains non-finite entries")


def spanned_projection(phi: Characteristics, w: FactorWeights) -> np.ndarray:
    """The n x n matrix Phi W^T mapping returns to their factor-spanned component."""
    return phi.phi @ w.w.T


def derive_factor_moments(
    moments: CrossSectionMoments,
    phi: Characteristics,
    w: FactorWeights,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> FactorModelMoments:
    """
    Derive factor, residual and cross moments from (mu, Sigma, Phi, W).

    Args:
        moments: Return moments of the date
        phi: Characteristics
        w: Factor weights
        tol: Tolerance policy (PSD band for sigma)

    Returns:
        FactorModelMoments with sigma_f and sigma_eps exactly symmetric

    Raises:
        ShapeError: If shapes do not conform
        NotPSDError: If sigma is not symmetric PSD within tolerance
    """
    _conform(moments, phi, w)
    sigma = clip_psd(moments.sigma, tol, "sigma")
    mu = moments.mu
    W = w.w
    P = spanned_projection(phi, w)
    Q = np.eye(moments.n) - P

    cross_xf = sigma @ W
    sigma_f = W.T @ cross_xf
    sigma_eps = Q @ sigma @ Q.T
    return FactorModelMoments(
        mu_f=W.T @ mu,
        sigma_f=(sigma_f + sigma_f.T) / 2,
        cross_xf=cross_xf,
        mu_eps=Q @ mu,
        sigma_eps=(sigma_eps + sigma_eps.T) / 2,
        cross_spanned_eps=P @ sigma @ Q.T,
    )


def realize_factors(
    x: ReturnSample | np.ndarray, phi: Characteristics, w: FactorWeights
) -> tuple[np.ndarray, np.ndarray]:
    """
    Realize factors f = W^T x and residuals eps = x - Phi f for one draw.

    Raises:
        ShapeError: If x, phi and w do not conform
    """
    xv = x.x if isinstance(x, ReturnSample) else _frozen_array(x, 1, "x")
    if xv.shape[0] != phi.n or w.w.shape != phi.phi.shape:
        raise ShapeError(
            f"x of length {xv.shape[0]}, phi {phi.phi.shape} and w {w.w.shape} do not conform"
        )
    f = w.w.T @ xv
    return f, xv - phi.phi @ f


@dataclass
class ValidationReport:
    """Violations found in one cross-section; empty means well-formed."""

    date_label: str = ""
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_cross_section(
    moments: CrossSectionMoments,
    phi: Characteristics,
    w: FactorWeights | None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> ValidationReport:
    """
    List everything wrong with a cross-section without raising.

    Checks non-finite entries, shape conformance, asymmetry of sigma and
    eigenvalues below the PSD rounding band.
    """
    report = ValidationReport(moments.date_label)
    blocks = {"mu": moments.mu, "sigma": moments.sigma, "phi": phi.phi}
    if w is not None:
        blocks["w"] = w.w
    for name, arr in blocks.items():
        if not np.all(np.isfinite(arr)):
            report.violations.append(f"{name}: non-finite entries")

    n = moments.n
    if n < 1:
        report.violations.append("mu: cross-section has no assets")
    if moments.sigma.shape != (n, n):
        report.violations.append(f"sigma: shape {moments.sigma.shape}, expected ({n}, {n})")
    if phi.n != n:
        report.violations.append(f"phi: {phi.n} rows, expected {n}")
    if w is not None and w.w.shape != phi.phi.shape:
        report.violations.append(f"w: shape {w.w.shape}, expected {phi.phi.shape}")

    sigma = moments.sigma
    if sigma.shape == (n, n) and n >= 1 and np.all(np.isfinite(sigma)):
        scale = max(1.0, float(np.linalg.norm(sigma)))
        asym = float(np.linalg.norm(sigma - sigma.T))
        if asym > tol.abs_residual_tol * scale:
            report.violations.append(f"sigma: asymmetric (residual {asym:.3e})")
        else:
            eig = sla.eigvalsh((sigma + sigma.T) / 2)
            band = tol.abs_residual_tol * max(1.0, float(np.max(np.abs(eig))))
            if eig[0] < -band:
                report.violations.append(f"sigma: not PSD (min eigenvalue {eig[0]:.3e})")

    if report.violations:
        logger.debug("Date %r: %d violation(s)", moments.date_label, len(report.violations))
    return report


@dataclass(eq=False)
class PanelEntry:
    """
    One date of a panel.

    Exactly one of weights or recipe is set; spec is present when the date
    was given as a generative model rather than as return moments.
    """

    moments: CrossSectionMoments
    phi: Characteristics
    weights: FactorWeights | None = None
    recipe: WeightRecipe | None = None
    spec: GenerativeSpec | None = None

    @property
    def date_label(self) -> str:
        return self.moments.date_label


@dataclass(eq=False)
class PanelSequence:
    """
    Ordered per-date records of an unbalanced panel.

    The asset count n_t may vary by date; the factor count m is common.

    Raises:
        ShapeError: If dates disagree on m
    """

    entries: list[PanelEntry] = field(default_factory=list)

    def __post_init__(self):
        ms = {entry.phi.m for entry in self.entries}
        if len(ms) > 1:
            raise ShapeError(f"Factor count m differs across dates: {sorted(ms)}")

    @property
    def m(self) -> int | None:
        return self.entries[0].phi.m if self.entries else None

    def __iter__(self) -> Iterator[PanelEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> PanelEntry:
        return self.entries[index]

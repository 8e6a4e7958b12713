"""
Mean-Variance Portfolios and Stochastic Discount Factors.

This module works on possibly singular covariance matrices through the
pseudoinverse:
- Weak no-arbitrage check mu in Im Sigma, with the arbitrage component
- MVE weights Sigma+ mu and the maximum squared Sharpe ratio
- The factor MVE portfolio and the gap between both Sharpe ratios
- Minimum-variance SDF coefficients for assets or factors

Risk aversion is normalized to one.
"""

import logging
from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from linfac.core.linalg import (
    DEFAULT_TOLERANCE,
    Tolerance,
    clip_psd,
    complement_projector,
    in_image,
    pinv,
)
from linfac.core.model import (
    CrossSectionMoments,
    FactorModelMoments,
    FactorWeights,
    ShapeError,
)

logger = logging.getLogger(__name__)


class PortfolioError(Exception):
    """Base exception for portfolio errors."""

    pass


class ArbitrageError(PortfolioError):
    """
    Raised when mu has a component in ker Sigma.

    Attributes:
        mu0: The arbitrage component (I - Sigma Sigma+) mu
        residual: Relative size of mu0
    """

    def __init__(self, mu0: np.ndarray, residual: float):
        self.mu0 = mu0
        self.residual = residual
        super().__init__(
            f"Weak no-arbitrage violated: mu has a risk-free component of relative size {residual:.3e}"
        )


@dataclass(frozen=True, eq=False)
class NoArbitrageCheck:
    """Result of the weak no-arbitrage test; mu0 is zero when it holds."""

    holds: bool
    residual: float
    mu0: np.ndarray


@dataclass(frozen=True, eq=False)
class MVEResult:
    """
    Mean-variance efficient portfolio.

    Attributes:
        weights: Sigma+ mu
        sr_squared: Maximum squared Sharpe ratio mu^T Sigma+ mu (non-negative)
    """

    weights: np.ndarray
    sr_squared: float


@dataclass(frozen=True, eq=False)
class SDFCoefficients:
    """
    Minimum-variance SDF M = intercept + loadings^T x.

    Attributes:
        intercept: 1 + mu^T Sigma+ mu
        loadings: -Sigma+ mu
        moment_pricing_error: E[M x] = mu - Sigma Sigma+ mu implied by the moments
    """

    intercept: float
    loadings: np.ndarray
    moment_pricing_error: np.ndarray

    def mean(self, mu) -> float:
        """E[M] under mean mu; equals one for the moments the SDF was built from."""
        return float(self.intercept + self.loadings @ np.asarray(mu, dtype=float))


def _mean_cov(mu, sigma, tol: Tolerance, name: str) -> tuple[np.ndarray, np.ndarray]:
    sigma = clip_psd(sigma, tol, name)
    mu = np.asarray(mu, dtype=float)
    if sigma.shape != (mu.shape[0], mu.shape[0]):
        raise ShapeError(f"{name} has shape {sigma.shape}, expected ({mu.shape[0]}, {mu.shape[0]})")
    return mu, sigma


def _no_arbitrage(mu: np.ndarray, sigma: np.ndarray, tol: Tolerance) -> NoArbitrageCheck:
    holds, residual = in_image(mu, sigma, tol)
    mu0 = complement_projector(sigma, tol) @ mu if mu.size else mu.copy()
    return NoArbitrageCheck(holds, residual, mu0 if not holds else np.zeros_like(mu))


def check_no_arbitrage(
    moments: CrossSectionMoments, tol: Tolerance = DEFAULT_TOLERANCE
) -> NoArbitrageCheck:
    """
    Test weak no-arbitrage, mu in Im Sigma.

    When it fails, mu0 = (I - Sigma Sigma+) mu is the kernel component of mu;
    the portfolio mu0 earns ||mu0||^2 without risk.
    """
    mu, sigma = _mean_cov(moments.mu, moments.sigma, tol, "sigma")
    return _no_arbitrage(mu, sigma, tol)


def _mve(mu: np.ndarray, sigma: np.ndarray, tol: Tolerance) -> MVEResult:
    weights = pinv(sigma, tol) @ mu
    return MVEResult(weights, max(float(mu @ weights), 0.0))


def mve(moments: CrossSectionMoments, tol: Tolerance = DEFAULT_TOLERANCE) -> MVEResult:
    """
    Mean-variance efficient portfolio w = Sigma+ mu.

    w maximizes w^T mu - w^T Sigma w / 2 and attains SR^2 = mu^T Sigma+ mu.

    Raises:
        ArbitrageError: If mu is not in Im Sigma
        NotPSDError: If sigma is not symmetric PSD
    """
    mu, sigma = _mean_cov(moments.mu, moments.sigma, tol, "sigma")
    na = _no_arbitrage(mu, sigma, tol)
    if not na.holds:
        raise ArbitrageError(na.mu0, na.residual)
    return _mve(mu, sigma, tol)


def factor_mve(fm: FactorModelMoments, tol: Tolerance = DEFAULT_TOLERANCE) -> MVEResult:
    """MVE portfolio of the factors, Sigma_f+ mu_f, with SR_f^2 = mu_f^T Sigma_f+ mu_f."""
    mu_f, sigma_f = _mean_cov(fm.mu_f, fm.sigma_f, tol, "sigma_f")
    return _mve(mu_f, sigma_f, tol)


def mve_objective(weights, moments: CrossSectionMoments) -> float:
    """Mean-variance objective w^T mu - w^T Sigma w / 2 at unit risk aversion."""
    w = np.asarray(weights, dtype=float)
    return float(w @ moments.mu - 0.5 * w @ moments.sigma @ w)


def _sdf(mu: np.ndarray, sigma: np.ndarray, tol: Tolerance) -> SDFCoefficients:
    na = _no_arbitrage(mu, sigma, tol)
    if not na.holds:
        raise ArbitrageError(na.mu0, na.residual)
    result = _mve(mu, sigma, tol)
    return SDFCoefficients(
        intercept=1.0 + result.sr_squared,
        loadings=-result.weights,
        moment_pricing_error=mu - sigma @ result.weights,
    )


@singledispatch
def sdf(moments, tol: Tolerance = DEFAULT_TOLERANCE) -> SDFCoefficients:
    """
    Minimum-variance SDF M = 1 - mu^T Sigma+ (x - mu).

    Accepts CrossSectionMoments (prices assets) or FactorModelMoments
    (prices factors, from mu_f and Sigma_f).

    Raises:
        ArbitrageError: If the mean is not in the image of the covariance
    """
    raise TypeError(f"sdf() does not support {type(moments).__name__}")


@sdf.register
def _(moments: CrossSectionMoments, tol: Tolerance = DEFAULT_TOLERANCE) -> SDFCoefficients:
    mu, sigma = _mean_cov(moments.mu, moments.sigma, tol, "sigma")
    return _sdf(mu, sigma, tol)


@sdf.register
def _(moments: FactorModelMoments, tol: Tolerance = DEFAULT_TOLERANCE) -> SDFCoefficients:
    mu_f, sigma_f = _mean_cov(moments.mu_f, moments.sigma_f, tol, "sigma_f")
    return _sdf(mu_f, sigma_f, tol)


def sharpe_gap(
    moments: CrossSectionMoments, w: FactorWeights, tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """
    SR^2 - SR_f^2 computed as d^T Sigma d with d = Sigma+ mu - W Sigma_f+ mu_f.

    The quadratic form avoids cancellation between two nearly equal Sharpe
    ratios. It equals the difference only under weak no-arbitrage.

    Raises:
        ArbitrageError: If mu is not in Im Sigma
    """
    mu, sigma = _mean_cov(moments.mu, moments.sigma, tol, "sigma")
    if w.n != mu.shape[0]:
        raise ShapeError(f"w has {w.n} rows, expected {mu.shape[0]}")
    na = _no_arbitrage(mu, sigma, tol)
    if not na.holds:
        raise ArbitrageError(na.mu0, na.residual)
    W = w.w
    sigma_f = W.T @ sigma @ W
    d = pinv(sigma, tol) @ mu - W @ (pinv((sigma_f + sigma_f.T) / 2, tol) @ (W.T @ mu))
    return max(float(d @ sigma @ d), 0.0)

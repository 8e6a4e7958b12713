"""
Three-Asset Counterexample.

Closed-form instance with n = 3 and m = 2 built from uncorrelated
xi_1, xi_2, xi_3 with variances a_i and means b_i:

    x = (xi_1, xi_2, rho/a1 xi_1 + rho/a2 xi_2 + xi_3),  Phi = [[1,0],[1,0],[0,1]]

With OLS weights the residuals are orthogonal to Phi W^T (EPS_ORTHO) and
cross-sectionally orthogonal, yet cov(Phi f, eps) is nonzero whenever
a1 != a2. In the continuation (b2 = b1, rho != 0 and b3 from the closed
form) mu is reproduced and spanned although TRADABLE_TRIPLE_EQ fails.

Sigma[2, 2] is rho/a1 + rho/a2 + a3. Viewed through the xi construction this
corresponds to var(xi_3) = a3 + rho (1 - rho) (1/a1 + 1/a2), which must be
positive for Sigma to be a covariance matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from linfac.core.model import Characteristics, CrossSectionMoments, FactorWeights
from linfac.diagnostics.conditions import ConditionId
from linfac.factors.builders import build_ols


class FixtureError(Exception):
    """Raised when fixture parameters violate their invariants."""

    pass


PHI = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ThreeAssetParams:
    """
    Parameters (a1, a2, a3, b1, b2, b3, rho).

    Raises:
        FixtureError: If some a_i <= 0 or the implied var(xi_3) is not positive
    """

    a1: float = 1.0
    a2: float = 2.0
    a3: float = 4.0
    b1: float = 1.0
    b2: float = 3.0
    b3: float = 2.0
    rho: float = 0.5

    def __post_init__(self):
        values = (self.a1, self.a2, self.a3, self.b1, self.b2, self.b3, self.rho)
        if not all(math.isfinite(v) for v in values):
            raise FixtureError(f"Parameters must be finite, got {values}")
        if min(self.a1, self.a2, self.a3) <= 0:
            raise FixtureError(f"Variances must be positive, got a=({self.a1}, {self.a2}, {self.a3})")
        if self.xi3_variance <= 0:
            raise FixtureError(
                f"rho={self.rho} makes Sigma indefinite (implied var(xi_3) = {self.xi3_variance:.6g})"
            )

    @classmethod
    def continuation(
        cls, a1: float = 1.0, a2: float = 2.0, a3: float = 4.0, b1: float = 1.0, rho: float = 0.5
    ) -> "ThreeAssetParams":
        """
        Continuation parameters: b2 = b1 and b3 = (1-rho) b1/a1 + (1-rho) b1/a2 + b1 a3/rho.

        Raises:
            FixtureError: If rho == 0
        """
        if rho == 0:
            raise FixtureError("Continuation requires rho != 0")
        b3 = (1 - rho) * b1 / a1 + (1 - rho) * b1 / a2 + b1 * a3 / rho
        return cls(a1, a2, a3, b1, b1, b3, rho)

    @classmethod
    def from_sequence(cls, values) -> "ThreeAssetParams":
        """Build from the seven values a1, a2, a3, b1, b2, b3, rho."""
        values = [float(v) for v in values]
        if len(values) != 7:
            raise FixtureError(f"Expected 7 parameters a1,a2,a3,b1,b2,b3,rho, got {len(values)}")
        return cls(*values)

    @property
    def xi3_variance(self) -> float:
        return self.a3 + self.rho * (1 - self.rho) * (1 / self.a1 + 1 / self.a2)

    @property
    def is_continuation(self) -> bool:
        if self.rho == 0 or self.b1 != self.b2:
            return False
        expected = type(self).continuation(self.a1, self.a2, self.a3, self.b1, self.rho).b3
        return math.isclose(self.b3, expected, rel_tol=1e-12, abs_tol=1e-12)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a1, self.a2, self.a3, self.b1, self.b2, self.b3, self.rho)


DEFAULT_PARAMS = ThreeAssetParams()


def three_asset_instance(
    p: ThreeAssetParams = DEFAULT_PARAMS, date_label: str = "three-asset"
) -> tuple[CrossSectionMoments, Characteristics, FactorWeights]:
    """Moments from the closed forms, Phi as given, and OLS weights W^T = Phi+."""
    a1, a2, a3, b1, b2, b3, rho = p.as_tuple()
    mu = np.array([b1, b2, rho / a1 * b1 + rho / a2 * b2 + b3])
    sigma = np.array(
        [
            [a1, 0.0, rho],
            [0.0, a2, rho],
            [rho, rho, rho / a1 + rho / a2 + a3],
        ]
    )
    phi = Characteristics(PHI)
    return CrossSectionMoments(mu, sigma, date_label), phi, build_ols(phi)


def three_asset_underlying_moments(p: ThreeAssetParams = DEFAULT_PARAMS) -> CrossSectionMoments:
    """The same moments assembled from the xi construction: mu = L b, Sigma = L D L^T."""
    L = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [p.rho / p.a1, p.rho / p.a2, 1.0]])
    D = np.diag([p.a1, p.a2, p.xi3_variance])
    return CrossSectionMoments(L @ np.array([p.b1, p.b2, p.b3]), L @ D @ L.T, "three-asset-xi")


def spanned_residual_covariance(p: ThreeAssetParams = DEFAULT_PARAMS) -> np.ndarray:
    """cov(Phi f, eps) in closed form: rows one and two are (a1-a2, a2-a1, 0)/4."""
    row = np.array([p.a1 - p.a2, p.a2 - p.a1, 0.0]) / 4
    return np.vstack([row, row, np.zeros(3)])


@dataclass(frozen=True)
class ThreeAssetExpectations:
    """Expected verdicts for a subset of conditions, plus the spanning witness."""

    statuses: dict[ConditionId, bool] = field(default_factory=dict)
    witness: np.ndarray | None = None


def three_asset_expected_reports(p: ThreeAssetParams = DEFAULT_PARAMS) -> ThreeAssetExpectations:
    """
    Verdicts the diagnostics must reproduce for these parameters.

    Every parameter choice gives an orthogonal projection Phi W^T with Phi of
    full column rank; the uncorrelatedness family holds exactly when a1 == a2.
    In continuation mode mu is reproduced and spanned with witness
    c = (0, b1/rho).
    """
    uncorrelated = p.a1 == p.a2
    statuses = {
        ConditionId.PHI_FULL_RANK: True,
        ConditionId.TRIVIAL_INTERSECT: True,
        ConditionId.PROJ: True,
        ConditionId.PROJ_SELF_ADJOINT: True,
        ConditionId.W_IDEMPOTENT_ON_PHI: True,
        ConditionId.EPS_ORTHO: True,
        ConditionId.CS_ORTHO: True,
        ConditionId.SIGEPS_RANK_DEFICIENT: True,
        ConditionId.NA: True,
        ConditionId.FSPANNED_EPS_UNCORR: uncorrelated,
        ConditionId.SIGMA_DECOMP: uncorrelated,
        ConditionId.TRADABLE_TRIPLE_EQ: uncorrelated,
        ConditionId.F_EPS_UNCORR: uncorrelated,
    }
    witness = None
    if p.is_continuation:
        for cid in (
            ConditionId.MU_REPRODUCED,
            ConditionId.RESID_UNPRICED,
            ConditionId.SPANNING,
            ConditionId.SR_EQUALITY,
            ConditionId.MVE_SPANNED,
            ConditionId.SDF_SPANNED,
            ConditionId.LEMCEX_VECTOR_EQ,
        ):
            statuses[cid] = True
        witness = np.array([0.0, p.b1 / p.rho])
    return ThreeAssetExpectations(statuses, witness)

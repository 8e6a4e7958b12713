"""
Condition Predicates.

Every structural condition relating factors, residuals, weights and risk
premia is evaluated here as a named predicate on population moments. Each
check returns a ConditionReport carrying the verdict, a relative residual
and, where one exists, a certificate (witness) vector or matrix.

Checks never raise on data properties; only non-conforming shapes raise.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from linfac.core.linalg import (
    DEFAULT_TOLERANCE,
    Check,
    Tolerance,
    image_basis,
    image_projector,
    in_image,
    kernel_basis,
    matrices_equal,
    pinv,
    rank_of,
)
from linfac.core.model import (
    Characteristics,
    CrossSectionMoments,
    FactorModelMoments,
    FactorWeights,
    ReturnSample,
    derive_factor_moments,
    realize_factors,
    spanned_projection,
)
from linfac.pricing.portfolio import NoArbitrageCheck, check_no_arbitrage

logger = logging.getLogger(__name__)


class ConditionId(str, Enum):
    """Named structural conditions, in reporting order."""

    FSPANNED_EPS_UNCORR = "FSPANNED_EPS_UNCORR"
    SIGMA_DECOMP = "SIGMA_DECOMP"
    PHI_FULL_RANK = "PHI_FULL_RANK"
    F_EPS_UNCORR = "F_EPS_UNCORR"
    TRADABLE_TRIPLE_EQ = "TRADABLE_TRIPLE_EQ"
    TRIVIAL_INTERSECT = "TRIVIAL_INTERSECT"
    EPS_ORTHO = "EPS_ORTHO"
    SIGEPS_RANK_DEFICIENT = "SIGEPS_RANK_DEFICIENT"
    PROJ = "PROJ"
    PROJ_SELF_ADJOINT = "PROJ_SELF_ADJOINT"
    CS_ORTHO = "CS_ORTHO"
    W_IDEMPOTENT_ON_PHI = "W_IDEMPOTENT_ON_PHI"
    RESID_UNPRICED = "RESID_UNPRICED"
    MU_REPRODUCED = "MU_REPRODUCED"
    CHARS_ARE_COVS = "CHARS_ARE_COVS"
    NA = "NA"
    SR_EQUALITY = "SR_EQUALITY"
    SPANNING = "SPANNING"
    MVE_SPANNED = "MVE_SPANNED"
    SDF_SPANNED = "SDF_SPANNED"
    LEMCEX_VECTOR_EQ = "LEMCEX_VECTOR_EQ"


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """
    Outcome of one condition check.

    Attributes:
        id: Which condition
        holds: Verdict under the tolerance policy
        residual: Non-negative relative residual behind the verdict
        witness: Optional certificate (e.g. the vector c with Sigma W c = mu)
        note: Short qualifier, e.g. how an x-dependent condition was evaluated
    """

    id: ConditionId
    holds: bool
    residual: float
    witness: np.ndarray | None = None
    note: str = ""


def _norm(a) -> float:
    return float(np.linalg.norm(a))


def _rel(num: float, *scales: float) -> float:
    return num / max(1.0, *scales)


class _Context:
    """Lazily derived quantities shared by all checks on one cross-section."""

    def __init__(
        self,
        moments: CrossSectionMoments,
        phi: Characteristics,
        w: FactorWeights,
        tol: Tolerance,
    ):
        self.fm: FactorModelMoments = derive_factor_moments(moments, phi, w, tol)
        self.moments = moments
        self.phi = phi.phi
        self.w = w.w
        self.tol = tol
        self.mu = moments.mu
        self.n = moments.n
        self.m = phi.m

    @cached_property
    def sigma(self) -> np.ndarray:
        s = self.moments.sigma
        return (s + s.T) / 2

    @cached_property
    def P(self) -> np.ndarray:
        return self.phi @ self.w.T

    @cached_property
    def na(self) -> NoArbitrageCheck:
        return check_no_arbitrage(self.moments, self.tol)

    @cached_property
    def sigma_pinv(self) -> np.ndarray:
        return pinv(self.sigma, self.tol)

    @cached_property
    def sigma_f_pinv(self) -> np.ndarray:
        return pinv(self.fm.sigma_f, self.tol)

    @cached_property
    def w_mve(self) -> np.ndarray:
        return self.sigma_pinv @ self.mu

    @cached_property
    def w_factor_mve(self) -> np.ndarray:
        return self.w @ (self.sigma_f_pinv @ self.fm.mu_f)

    @cached_property
    def sr_squared(self) -> float:
        return max(float(self.mu @ self.w_mve), 0.0)

    @cached_property
    def sr_f_squared(self) -> float:
        return max(float(self.fm.mu_f @ self.sigma_f_pinv @ self.fm.mu_f), 0.0)


_Checker = Callable[[_Context], ConditionReport]
_REGISTRY: dict[ConditionId, _Checker] = {}


def _condition(cid: ConditionId) -> Callable[[_Checker], _Checker]:
    def register(func: _Checker) -> _Checker:
        _REGISTRY[cid] = func
        return func

    return register


def _report(cid: ConditionId, result: Check, witness=None, note: str = "") -> ConditionReport:
    return ConditionReport(cid, bool(result.holds), float(result.residual), witness, note)


def _within(cid: ConditionId, residual: float, ctx: _Context, witness=None, note="") -> ConditionReport:
    return ConditionReport(cid, residual <= ctx.tol.abs_residual_tol, float(residual), witness, note)


@_condition(ConditionId.FSPANNED_EPS_UNCORR)
def _fspanned_eps_uncorr(ctx: _Context) -> ConditionReport:
    ps = ctx.P @ ctx.sigma
    result = matrices_equal(ps, ps @ ctx.P.T, ctx.tol)
    return _report(ConditionId.FSPANNED_EPS_UNCORR, result, witness=ctx.fm.cross_spanned_eps)


@_condition(ConditionId.SIGMA_DECOMP)
def _sigma_decomp(ctx: _Context) -> ConditionReport:
    rebuilt = ctx.phi @ ctx.fm.sigma_f @ ctx.phi.T + ctx.fm.sigma_eps
    return _report(ConditionId.SIGMA_DECOMP, matrices_equal(ctx.sigma, rebuilt, ctx.tol))


@_condition(ConditionId.PHI_FULL_RANK)
def _phi_full_rank(ctx: _Context) -> ConditionReport:
    r = rank_of(ctx.phi, ctx.tol)
    return ConditionReport(
        ConditionId.PHI_FULL_RANK, r == ctx.m, float(ctx.m - r), note=f"rank {r} of {ctx.m}"
    )


@_condition(ConditionId.F_EPS_UNCORR)
def _f_eps_uncorr(ctx: _Context) -> ConditionReport:
    wts = ctx.w.T @ ctx.sigma
    result = matrices_equal(wts, ctx.fm.sigma_f @ ctx.phi.T, ctx.tol)
    return _report(ConditionId.F_EPS_UNCORR, result, witness=wts - ctx.fm.sigma_f @ ctx.phi.T)


@_condition(ConditionId.TRADABLE_TRIPLE_EQ)
def _tradable_triple_eq(ctx: _Context) -> ConditionReport:
    left = ctx.fm.cross_xf @ ctx.phi.T
    ps = ctx.P @ ctx.sigma
    middle = ps @ ctx.P.T
    first = matrices_equal(left, middle, ctx.tol)
    second = matrices_equal(middle, ps, ctx.tol)
    return ConditionReport(
        ConditionId.TRADABLE_TRIPLE_EQ,
        first.holds and second.holds,
        max(first.residual, second.residual),
    )


@_condition(ConditionId.TRIVIAL_INTERSECT)
def _trivial_intersect(ctx: _Context) -> ConditionReport:
    wt = ctx.w.T
    scale = float(np.linalg.norm(ctx.phi, 2) * np.linalg.norm(wt, 2)) if wt.size else 0.0
    r_w = rank_of(wt, ctx.tol) if wt.size else 0
    r_p = rank_of(ctx.P, ctx.tol, scale=scale) if ctx.P.size else 0
    deficit = r_w - r_p
    return ConditionReport(
        ConditionId.TRIVIAL_INTERSECT,
        deficit == 0,
        float(deficit),
        note=f"dim(Im W^T ∩ ker Phi) = {deficit}",
    )


@_condition(ConditionId.EPS_ORTHO)
def _eps_ortho(ctx: _Context) -> ConditionReport:
    product = ctx.P @ ctx.fm.sigma_eps
    p_norm = _norm(ctx.P)
    residual = _rel(_norm(product), p_norm * _norm(ctx.sigma), p_norm * _norm(ctx.fm.sigma_eps))
    return _within(ConditionId.EPS_ORTHO, residual, ctx)


@_condition(ConditionId.SIGEPS_RANK_DEFICIENT)
def _sigeps_rank_deficient(ctx: _Context) -> ConditionReport:
    sigma_eps = ctx.fm.sigma_eps
    if ctx.n == 0:
        return ConditionReport(ConditionId.SIGEPS_RANK_DEFICIENT, False, 0.0, note="empty cross-section")
    Q = np.eye(ctx.n) - ctx.P
    scale = float(np.linalg.norm(Q, 2) ** 2 * np.linalg.norm(ctx.sigma, 2))
    # Singular values within the residual tolerance count as zero, also for Sigma = 0.
    floor = ctx.tol.abs_residual_tol * max(1.0, scale)
    r = rank_of(sigma_eps, ctx.tol, scale=scale, floor=floor)
    s_min = float(np.linalg.svd(sigma_eps, compute_uv=False)[-1])
    witness = kernel_basis(sigma_eps, ctx.tol, scale=scale, floor=floor).basis if r < ctx.n else None
    return ConditionReport(
        ConditionId.SIGEPS_RANK_DEFICIENT,
        r < ctx.n,
        _rel(s_min, scale, float(np.linalg.norm(sigma_eps, 2))),
        witness,
        note=f"rank {r} of {ctx.n}",
    )


@_condition(ConditionId.PROJ)
def _proj(ctx: _Context) -> ConditionReport:
    return _report(ConditionId.PROJ, matrices_equal(ctx.P @ ctx.P, ctx.P, ctx.tol))


@_condition(ConditionId.PROJ_SELF_ADJOINT)
def _proj_self_adjoint(ctx: _Context) -> ConditionReport:
    return _report(ConditionId.PROJ_SELF_ADJOINT, matrices_equal(ctx.P, ctx.P.T, ctx.tol))


@_condition(ConditionId.CS_ORTHO)
def _cs_ortho(ctx: _Context) -> ConditionReport:
    # (Phi f)^T eps = x^T M x; it vanishes on the support mu + Im Sigma iff
    # the symmetric part of M vanishes on span(mu, Im Sigma).
    M = ctx.P.T @ (np.eye(ctx.n) - ctx.P)
    sym = (M + M.T) / 2
    support = image_basis(np.column_stack([ctx.sigma, ctx.mu]), ctx.tol).basis
    restricted = support.T @ sym @ support
    residual = _rel(_norm(restricted), _norm(ctx.P) * _norm(np.eye(ctx.n) - ctx.P))
    return _within(
        ConditionId.CS_ORTHO,
        residual,
        ctx,
        note="moment level: quadratic form on the support mu + Im Sigma",
    )


@_condition(ConditionId.W_IDEMPOTENT_ON_PHI)
def _w_idempotent_on_phi(ctx: _Context) -> ConditionReport:
    wt = ctx.w.T
    return _report(ConditionId.W_IDEMPOTENT_ON_PHI, matrices_equal(wt @ ctx.phi @ wt, wt, ctx.tol))


@_condition(ConditionId.RESID_UNPRICED)
def _resid_unpriced(ctx: _Context) -> ConditionReport:
    residual = _rel(_norm(ctx.fm.mu_eps), _norm(ctx.mu))
    return _within(ConditionId.RESID_UNPRICED, residual, ctx, witness=ctx.fm.mu_eps)


@_condition(ConditionId.MU_REPRODUCED)
def _mu_reproduced(ctx: _Context) -> ConditionReport:
    return _report(ConditionId.MU_REPRODUCED, matrices_equal(ctx.mu, ctx.P @ ctx.mu, ctx.tol))


@_condition(ConditionId.CHARS_ARE_COVS)
def _chars_are_covs(ctx: _Context) -> ConditionReport:
    fm = ctx.fm
    gram = fm.sigma_f + np.outer(fm.mu_f, fm.mu_f)
    second_moment = fm.cross_xf + np.outer(ctx.mu, fm.mu_f)
    result = matrices_equal(ctx.phi @ gram, second_moment, ctx.tol)
    unique = ctx.m == 0 or rank_of(gram, ctx.tol) == ctx.m
    note = "unique minimizer" if unique else "minimizer not unique (singular factor Gram matrix)"
    return _report(ConditionId.CHARS_ARE_COVS, result, note=note)


@_condition(ConditionId.NA)
def _na(ctx: _Context) -> ConditionReport:
    na = ctx.na
    return ConditionReport(
        ConditionId.NA, na.holds, na.residual, None if na.holds else na.mu0
    )


@_condition(ConditionId.SR_EQUALITY)
def _sr_equality(ctx: _Context) -> ConditionReport:
    if ctx.na.holds:
        d = ctx.w_mve - ctx.w_factor_mve
        gap = max(float(d @ ctx.sigma @ d), 0.0)
        residual = _rel(gap, ctx.sr_squared)
        return _within(ConditionId.SR_EQUALITY, residual, ctx, note=f"SR^2 - SR_f^2 = {gap:.6e}")
    gap = ctx.sr_squared - ctx.sr_f_squared
    return _within(
        ConditionId.SR_EQUALITY,
        _rel(abs(gap), ctx.sr_squared),
        ctx,
        note="weak no-arbitrage fails; Sharpe ratios compared directly",
    )


@_condition(ConditionId.SPANNING)
def _spanning(ctx: _Context) -> ConditionReport:
    sw = ctx.fm.cross_xf
    result = in_image(ctx.mu, sw, ctx.tol)
    witness = pinv(sw, ctx.tol) @ ctx.mu if result.holds else None
    return _report(ConditionId.SPANNING, result, witness=witness)


@_condition(ConditionId.MVE_SPANNED)
def _mve_spanned(ctx: _Context) -> ConditionReport:
    d = ctx.w_mve - ctx.w_factor_mve
    on_image = image_projector(ctx.sigma, ctx.tol) @ d
    residual = _rel(_norm(on_image), _norm(ctx.w_mve), _norm(ctx.w_factor_mve))
    return _within(
        ConditionId.MVE_SPANNED,
        residual,
        ctx,
        note="loading vectors compared after projection onto Im Sigma",
    )


@_condition(ConditionId.SDF_SPANNED)
def _sdf_spanned(ctx: _Context) -> ConditionReport:
    pricing_error = ctx.mu - ctx.fm.cross_xf @ (ctx.sigma_f_pinv @ ctx.fm.mu_f)
    residual = _rel(_norm(pricing_error), _norm(ctx.mu))
    return _within(ConditionId.SDF_SPANNED, residual, ctx, witness=pricing_error)


@_condition(ConditionId.LEMCEX_VECTOR_EQ)
def _lemcex_vector_eq(ctx: _Context) -> ConditionReport:
    # Needs b with Sigma W Phi^T b = mu, so that b = 0 does not qualify.
    A = ctx.fm.cross_xf @ ctx.phi.T
    reachable = in_image(ctx.mu, A, ctx.tol)
    if not reachable.holds:
        return _report(ConditionId.LEMCEX_VECTOR_EQ, reachable, note="mu not in Im(Sigma W Phi^T)")
    b = pinv(A, ctx.tol) @ ctx.mu
    Ab = A @ b
    equal = matrices_equal(Ab, ctx.P @ Ab, ctx.tol)
    return ConditionReport(
        ConditionId.LEMCEX_VECTOR_EQ,
        equal.holds,
        max(reachable.residual, equal.residual),
        b,
        note="least-squares witness b, not claimed unique",
    )


def check(
    cid: ConditionId | str,
    moments: CrossSectionMoments,
    phi: Characteristics,
    w: FactorWeights,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> ConditionReport:
    """
    Evaluate a single condition on one cross-section.

    Raises:
        ShapeError: If moments, phi and w do not conform
        ValueError: If cid names no condition
    """
    cid = ConditionId(cid)
    return _REGISTRY[cid](_Context(moments, phi, w, tol))


def run_all(
    moments: CrossSectionMoments,
    phi: Characteristics,
    w: FactorWeights,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> list[ConditionReport]:
    """Evaluate every condition, sharing derived quantities, in ConditionId order."""
    ctx = _Context(moments, phi, w, tol)
    reports = [_REGISTRY[cid](ctx) for cid in ConditionId]
    logger.debug(
        "Date %r: %d of %d conditions hold",
        moments.date_label,
        sum(r.holds for r in reports),
        len(reports),
    )
    return reports


def is_nondegenerate(phi: Characteristics, w: FactorWeights, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Whether Phi W^T is materially nonzero."""
    return _norm(spanned_projection(phi, w)) > tol.abs_residual_tol


def check_cs_ortho_on_sample(
    x: ReturnSample,
    phi: Characteristics,
    w: FactorWeights,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> ConditionReport:
    """
    Evaluate (Phi f)^T eps on one realized return vector.

    The residual is |(Phi f)^T eps| / max(1, ||x||^2) and the witness is the
    raw scalar.
    """
    f, eps = realize_factors(x, phi, w)
    value = float((phi.phi @ f) @ eps)
    xv = x.x if isinstance(x, ReturnSample) else np.asarray(x, dtype=float)
    residual = _rel(abs(value), _norm(xv) ** 2)
    return ConditionReport(
        ConditionId.CS_ORTHO,
        residual <= tol.abs_residual_tol,
        residual,
        np.array([value]),
        note="sample path",
    )

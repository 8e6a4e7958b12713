"""
Generative Factor Model.

This module covers the data-generating model x = Phi g + eta with abstract
factors g ~ (mu_g, Sigma_g) and idiosyncratic risk eta ~ (0, Sigma_eta):
- GenerativeSpec and the return moments it implies
- Closed-form moments of the GLS-type factors and their simplifications
- A report-only verification of the spanning construction
- Seeded Gaussian simulation and random specs for property campaigns

The closed forms for Sigma_eps and the spanning property need Im Phi to be
invariant under the orthogonal projector onto Im Sigma_eta. This always holds
for invertible, isotropic or zero Sigma_eta; for other singular Sigma_eta it
is checked and reported as the "aligned" precondition.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import linalg as sla

from linfac.core.linalg import (
    DEFAULT_TOLERANCE,
    Check,
    LinalgError,
    Tolerance,
    clip_psd,
    image_basis,
    image_projector,
    matrices_equal,
    pinv,
    rank_of,
    symmetrize,
)
from linfac.core.model import (
    Characteristics,
    CrossSectionMoments,
    ReturnSample,
    derive_factor_moments,
)
from linfac.diagnostics.conditions import ConditionId, check
from linfac.factors.builders import build_gls_type_generative, gls_type_transform

logger = logging.getLogger(__name__)


class GenerativeSpecError(Exception):
    """Raised when a generative model specification is invalid."""

    pass


class Distribution(str, Enum):
    """Distribution of simulated factor and idiosyncratic shocks."""

    GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class GenerativeSpec:
    """
    One date of the generative model x = Phi g + eta.

    Attributes:
        phi: n x m characteristics
        mu_g: m-vector of abstract factor risk premia
        sigma_g: m x m symmetric positive definite factor covariance
        sigma_eta: n x n symmetric PSD idiosyncratic covariance (may be singular)

    Idiosyncratic risk has zero mean and is uncorrelated with g.

    Raises:
        GenerativeSpecError: If shapes do not conform, sigma_g is not
            positive definite or sigma_eta is not PSD
    """

    phi: Characteristics
    mu_g: np.ndarray
    sigma_g: np.ndarray
    sigma_eta: np.ndarray

    def __post_init__(self):
        if not isinstance(self.phi, Characteristics):
            object.__setattr__(self, "phi", Characteristics(self.phi))
        for name in ("mu_g", "sigma_g", "sigma_eta"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self.validate()

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def m(self) -> int:
        return self.phi.m

    def validate(self, tol: Tolerance = DEFAULT_TOLERANCE) -> None:
        """
        Check shapes, positive definiteness of sigma_g and PSD-ness of sigma_eta.

        Raises:
            GenerativeSpecError: On the first violation found
        """
        n, m = self.n, self.m
        if self.mu_g.shape != (m,):
            raise GenerativeSpecError(f"mu_g has shape {self.mu_g.shape}, expected ({m},)")
        if self.sigma_g.shape != (m, m):
            raise GenerativeSpecError(f"sigma_g has shape {self.sigma_g.shape}, expected ({m}, {m})")
        if self.sigma_eta.shape != (n, n):
            raise GenerativeSpecError(
                f"sigma_eta has shape {self.sigma_eta.shape}, expected ({n}, {n})"
            )
        try:
            sigma_g = symmetrize(self.sigma_g, tol, "sigma_g")
            clip_psd(self.sigma_eta, tol, "sigma_eta")
            if not np.all(np.isfinite(self.mu_g)) or not np.all(np.isfinite(self.phi.phi)):
                raise LinalgError("mu_g or phi contains non-finite entries")
        except LinalgError as e:
            raise GenerativeSpecError(str(e)) from e
        if m:
            eig = sla.eigvalsh(sigma_g)
            if eig[0] <= tol.abs_residual_tol * max(1.0, float(eig[-1])):
                raise GenerativeSpecError(
                    f"sigma_g must be positive definite, smallest eigenvalue is {eig[0]:.3e}"
                )


@dataclass(frozen=True, eq=False)
class GLSTypePredictions:
    """
    Closed-form moments of the GLS-type factors W^T = (S Phi)+ S.

    Attributes:
        mu_f: (S Phi)+ S Phi mu_g
        sigma_f: B Sigma_g B^T + Q with B = (S Phi)+ S Phi
        sigma_eps: Sigma_eta - Phi Q Phi^T
        q: (S Phi)+ U U+ (Phi^T S^T)+
        simplifications: Cross-checks of the special-case formulas that apply
            to this spec, keyed "invertible", "isotropic", "isotropic_full_rank"
    """

    mu_f: np.ndarray
    sigma_f: np.ndarray
    sigma_eps: np.ndarray
    q: np.ndarray
    simplifications: dict[str, Check] = field(default_factory=dict)


@dataclass
class SpanningReport:
    """Named checks on the constructed tradable model; passed iff all hold."""

    checks: dict[str, Check] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.holds for check in self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [name for name, check in self.checks.items() if not check.holds]


def _combine(*checks: Check) -> Check:
    return Check(all(c.holds for c in checks), max((c.residual for c in checks), default=0.0))


def implied_moments(spec: GenerativeSpec, date_label: str = "") -> CrossSectionMoments:
    """
    Return moments implied by a generative spec.

    mu = Phi mu_g and Sigma = Phi Sigma_g Phi^T + Sigma_eta. Weak no-arbitrage
    holds automatically since mu lies in Im Phi = Im(Phi Sigma_g Phi^T).
    """
    phi = spec.phi.phi
    sigma = phi @ spec.sigma_g @ phi.T + spec.sigma_eta
    return CrossSectionMoments(phi @ spec.mu_g, (sigma + sigma.T) / 2, date_label)


def noise_alignment(spec: GenerativeSpec, tol: Tolerance = DEFAULT_TOLERANCE) -> Check:
    """
    Test whether Im Phi is invariant under the projector onto Im Sigma_eta.

    Residual is ||(I - P_phi) P_eta P_phi||_F, zero exactly when Im Phi splits
    into a part inside Im Sigma_eta and a part inside ker Sigma_eta.
    """
    p_phi = image_projector(spec.phi.phi, tol)
    p_eta = image_projector(spec.sigma_eta, tol)
    residual = float(np.linalg.norm((np.eye(spec.n) - p_phi) @ p_eta @ p_phi))
    return Check(residual <= tol.abs_residual_tol, residual)


def _isotropic_variance(spec: GenerativeSpec, tol: Tolerance) -> float | None:
    if spec.n == 0:
        return None
    s2 = float(np.trace(spec.sigma_eta)) / spec.n
    if s2 <= tol.abs_residual_tol:
        return None
    if not matrices_equal(spec.sigma_eta, s2 * np.eye(spec.n), tol).holds:
        return None
    return s2


def gls_type_predictions(spec: GenerativeSpec, tol: Tolerance = DEFAULT_TOLERANCE) -> GLSTypePredictions:
    """
    Closed-form factor and residual moments of the GLS-type construction.

    Applicable simplifications are evaluated independently and compared
    with the general formulas:
    - invertible Sigma_eta: Q = (S Phi)+ (Phi^T S^T)+
    - Sigma_eta = s2 I: mu_f = Phi+ Phi mu_g, Sigma_eps = s2 (I - Phi Phi+),
      Q = s2 Phi+ (Phi^T)+
    - additionally rank Phi = m: mu_f = mu_g, Sigma_f = Sigma_g + Q,
      Q = s2 (Phi^T Phi)^-1

    Raises:
        GenerativeSpecError: If the spec is invalid
    """
    spec.validate(tol)
    phi = spec.phi.phi
    n, m = spec.n, spec.m
    U, S = gls_type_transform(spec.sigma_eta, tol)
    A = pinv(S @ phi, tol)
    B = A @ S @ phi
    q = A @ image_projector(U, tol) @ A.T
    q = (q + q.T) / 2

    mu_f = B @ spec.mu_g
    sigma_f = B @ spec.sigma_g @ B.T + q
    sigma_eps = spec.sigma_eta - phi @ q @ phi.T

    simplifications: dict[str, Check] = {}
    if rank_of(spec.sigma_eta, tol) == n:
        simplifications["invertible"] = matrices_equal(q, A @ A.T, tol)

    s2 = _isotropic_variance(spec, tol)
    if s2 is not None:
        phi_pinv = pinv(phi, tol)
        iso_q = s2 * phi_pinv @ phi_pinv.T
        proj = phi_pinv @ phi
        simplifications["isotropic"] = _combine(
            matrices_equal(mu_f, proj @ spec.mu_g, tol),
            matrices_equal(sigma_f, proj @ spec.sigma_g @ proj + iso_q, tol),
            matrices_equal(sigma_eps, s2 * (np.eye(n) - phi @ phi_pinv), tol),
            matrices_equal(q, iso_q, tol),
        )
        if m and rank_of(phi, tol) == m:
            gram_inv = np.linalg.inv(phi.T @ phi)
            simplifications["isotropic_full_rank"] = _combine(
                matrices_equal(mu_f, spec.mu_g, tol),
                matrices_equal(sigma_f, spec.sigma_g + s2 * gram_inv, tol),
                matrices_equal(sigma_eps, s2 * (np.eye(n) - phi @ gram_inv @ phi.T), tol),
                matrices_equal(q, s2 * gram_inv, tol),
            )

    return GLSTypePredictions(
        mu_f=mu_f,
        sigma_f=(sigma_f + sigma_f.T) / 2,
        sigma_eps=(sigma_eps + sigma_eps.T) / 2,
        q=q,
        simplifications=simplifications,
    )


def verify_generative_spanning(spec: GenerativeSpec, tol: Tolerance = DEFAULT_TOLERANCE) -> SpanningReport:
    """
    Verify the GLS-type spanning construction on one spec.

    Builds W^T = (S Phi)+ S, derives the tradable model from the implied
    moments and reports:
    - aligned: the Im Phi / Im Sigma_eta precondition
    - spanning, resid_unpriced, f_eps_uncorr: the corresponding conditions
    - projector, whitening: the projection and S Sigma_eta S^T = U U+ checks
    - eps_projection: Sigma_eps = (I - Pi) Sigma_eta (I - Pi)^T with Pi = Phi W^T
    - mu_f, sigma_f, sigma_eps: closed forms against the derived moments
    - simplification checks that apply to the spec
    """
    moments = implied_moments(spec)
    weights, gls = build_gls_type_generative(spec, tol)
    fm = derive_factor_moments(moments, spec.phi, weights, tol)
    predicted = gls_type_predictions(spec, tol)
    residual_map = np.eye(spec.n) - spec.phi.phi @ weights.w.T

    def condition(cid: ConditionId) -> Check:
        report = check(cid, moments, spec.phi, weights, tol)
        return Check(report.holds, report.residual)

    checks = {
        "aligned": noise_alignment(spec, tol),
        "spanning": condition(ConditionId.SPANNING),
        "resid_unpriced": condition(ConditionId.RESID_UNPRICED),
        "f_eps_uncorr": condition(ConditionId.F_EPS_UNCORR),
        "projector": _combine(gls.projector_idempotent, gls.projector_image),
        "whitening": gls.whitening,
        "eps_projection": matrices_equal(
            fm.sigma_eps, residual_map @ spec.sigma_eta @ residual_map.T, tol
        ),
        "mu_f": matrices_equal(predicted.mu_f, fm.mu_f, tol),
        "sigma_f": matrices_equal(predicted.sigma_f, fm.sigma_f, tol),
        "sigma_eps": matrices_equal(predicted.sigma_eps, fm.sigma_eps, tol),
    }
    for name, simplification in predicted.simplifications.items():
        checks[f"simplification_{name}"] = simplification

    report = SpanningReport(checks)
    if not report.passed:
        logger.debug("GLS-type verification failed: %s", ", ".join(report.failed))
    return report


def _draw(spec: GenerativeSpec, draws: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.multivariate_normal(spec.mu_g, spec.sigma_g, size=draws, method="cholesky")
    eta = rng.multivariate_normal(np.zeros(spec.n), spec.sigma_eta, size=draws, method="eigh")
    return g @ spec.phi.phi.T + eta


def simulate_returns(
    spec: GenerativeSpec,
    draws: int,
    seed: int = 0,
    distribution: Distribution | str = Distribution.GAUSSIAN,
) -> np.ndarray:
    """
    Draw `draws` independent return vectors x = Phi g + eta as rows.

    g and eta are drawn independently, so they are uncorrelated. The same
    seed always yields the same array.

    Raises:
        GenerativeSpecError: If the distribution tag is unknown or draws < 0
    """
    _distribution(distribution)
    if draws < 0:
        raise GenerativeSpecError(f"draws must be non-negative, got {draws}")
    return _draw(spec, draws, np.random.default_rng(seed))


def simulate_panel(
    spec: GenerativeSpec,
    dates: int,
    seed: int = 0,
    distribution: Distribution | str = Distribution.GAUSSIAN,
) -> list[ReturnSample]:
    """
    Simulate one return draw per date from independent, seed-partitioned streams.

    Date t uses the t-th child of SeedSequence(seed), so a date's draw does
    not depend on how many dates are simulated.

    Raises:
        GenerativeSpecError: If the distribution tag is unknown or dates < 0
    """
    _distribution(distribution)
    if dates < 0:
        raise GenerativeSpecError(f"dates must be non-negative, got {dates}")
    children = np.random.SeedSequence(seed).spawn(dates)
    return [
        ReturnSample(_draw(spec, 1, np.random.default_rng(child))[0], f"t{t}")
        for t, child in enumerate(children)
    ]


def _distribution(tag: Distribution | str) -> Distribution:
    try:
        return Distribution(tag)
    except ValueError as e:
        valid = ", ".join(d.value for d in Distribution)
        raise GenerativeSpecError(f"Unknown distribution {tag!r}; valid: {valid}") from e


def sample_moments(samples, date_label: str = "") -> CrossSectionMoments:
    """Sample mean and covariance (ddof=1) of draws stacked as rows or given as ReturnSamples."""
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], ReturnSample):
        samples = np.vstack([s.x for s in samples])
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise GenerativeSpecError(f"Need at least two draws stacked as rows, got shape {X.shape}")
    return CrossSectionMoments(X.mean(axis=0), np.cov(X, rowvar=False), date_label)


def random_spec(
    rng: np.random.Generator,
    n: int,
    m: int,
    eta_rank: int | None = None,
    duplicate_column: bool = False,
    isotropic: bool = False,
    aligned: bool = True,
) -> GenerativeSpec:
    """
    Draw a random spec for property campaigns.

    Phi has standard normal entries; with duplicate_column the last column
    copies the first. Sigma_g = C C^T + I with C standard normal. Sigma_eta is
    s2 I when isotropic, otherwise V diag(d) V^T of rank eta_rank with d drawn
    from [0.5, 2]. With aligned the columns of V are split between Im Phi and
    its complement, so Im Phi is invariant under the projector onto
    Im Sigma_eta; otherwise V is a random orthonormal n x eta_rank frame.

    Raises:
        GenerativeSpecError: If eta_rank is outside 0..n
    """
    phi = rng.standard_normal((n, m))
    if duplicate_column and m >= 2:
        phi[:, -1] = phi[:, 0]
    c = rng.standard_normal((m, m))
    sigma_g = c @ c.T + np.eye(m)
    mu_g = rng.standard_normal(m)

    if isotropic:
        return GenerativeSpec(Characteristics(phi), mu_g, sigma_g, rng.uniform(0.5, 2.0) * np.eye(n))

    rank = int(rng.integers(0, n + 1)) if eta_rank is None else eta_rank
    if not 0 <= rank <= n:
        raise GenerativeSpecError(f"eta_rank must lie in 0..{n}, got {rank}")

    if aligned:
        inside = image_basis(phi).basis
        k = inside.shape[1]
        outside = sla.null_space(inside.T) if k else np.eye(n)
        j = int(rng.integers(max(0, rank - (n - k)), min(k, rank) + 1))
        frame = np.hstack([
            inside @ _random_rotation(rng, k)[:, :j],
            outside @ _random_rotation(rng, n - k)[:, : rank - j],
        ])
    else:
        frame = _random_rotation(rng, n)[:, :rank]
    d = rng.uniform(0.5, 2.0, size=rank)
    sigma_eta = (frame * d) @ frame.T
    return GenerativeSpec(Characteristics(phi), mu_g, sigma_g, (sigma_eta + sigma_eta.T) / 2)


def _random_rotation(rng: np.random.Generator, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))

"""
Tests for Condition Predicates and the Implication Graph.

This test suite covers:
1. Individual conditions on hand-built cross-sections
2. Witnesses (spanning coefficients, arbitrage portfolio, kernel basis)
3. Sample-path cross-sectional orthogonality
4. The random campaign: no VIOLATED edge, agreement of the four spanning
   characterizations, SR_f^2 <= SR^2, rank deficiency of Sigma_eps
5. Strictness witnesses for one-sided edges
6. The quarter-rotation counterexamples that motivate the PROJ guards
7. Degenerate scales: vanishing Sigma or Q, noise-level spectra, Sharpe gap scaling
"""

import numpy as np
import pytest

from conftest import matrix_of_rank, psd_of_rank, random_instance
from linfac.core.model import (
    Characteristics,
    CrossSectionMoments,
    FactorWeights,
    ReturnSample,
    derive_factor_moments,
)
from linfac.diagnostics.conditions import (
    ConditionId,
    check,
    check_cs_ortho_on_sample,
    is_nondegenerate,
    run_all,
)
from linfac.diagnostics.graph import (
    EDGES,
    NONDEGENERATE,
    Edge,
    EdgeStatus,
    verify_implication_graph,
)
from linfac.factors.builders import build_general_form, build_ols
from linfac.fixtures.three_asset import DEFAULT_PARAMS, ThreeAssetParams, three_asset_instance
from linfac.pricing.portfolio import factor_mve, mve

C = ConditionId
SPANNING_FAMILY = (C.SPANNING, C.SR_EQUALITY, C.MVE_SPANNED, C.SDF_SPANNED)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _verdicts(reports) -> dict[ConditionId, bool]:
    return {r.id: r.holds for r in reports}


def _rotation_case():
    """Phi = I, Sigma = I and the non-idempotent P = (I + J)/2."""
    phi = Characteristics(np.eye(2))
    w = FactorWeights(((np.eye(2) + J) / 2).T)
    return CrossSectionMoments(np.zeros(2), np.eye(2), "rotation"), phi, w


@pytest.fixture(scope="module")
def campaign():
    """1000 random cross-sections with their reports and graph results."""
    rng = np.random.default_rng(1234)
    results = []
    for _ in range(1000):
        inst = random_instance(rng)
        reports = run_all(inst.moments, inst.phi, inst.w)
        graph = verify_implication_graph(reports, is_nondegenerate(inst.phi, inst.w))
        results.append((inst, reports, graph))
    return results


@pytest.fixture(scope="module")
def degenerate_campaign():
    """600 cross-sections with wide covariance spectra and noise-level directions."""
    rng = np.random.default_rng(4321)
    results = []
    for _ in range(600):
        inst = random_instance(rng, degenerate=True)
        reports = run_all(inst.moments, inst.phi, inst.w)
        graph = verify_implication_graph(reports, is_nondegenerate(inst.phi, inst.w))
        results.append((inst, reports, graph))
    return results


class TestConditions:
    """Test individual conditions on constructed cross-sections."""

    def test_ols_projection_conditions(self, rng):
        """OLS weights give a self-adjoint projector with orthogonal residuals."""
        phi = Characteristics(matrix_of_rank(rng, 5, 2, 2))
        moments = CrossSectionMoments(rng.standard_normal(5), psd_of_rank(rng, 5, 5))
        verdicts = _verdicts(run_all(moments, phi, build_ols(phi)))
        for cid in (C.PHI_FULL_RANK, C.TRIVIAL_INTERSECT, C.PROJ, C.PROJ_SELF_ADJOINT,
                    C.W_IDEMPOTENT_ON_PHI, C.EPS_ORTHO, C.CS_ORTHO, C.SIGEPS_RANK_DEFICIENT, C.NA):
            assert verdicts[cid], cid

    def test_report_order_and_types(self, rng):
        """run_all reports every condition once, in declaration order."""
        inst = random_instance(rng, "ols", "in_image")
        reports = run_all(inst.moments, inst.phi, inst.w)
        assert [r.id for r in reports] == list(ConditionId)
        assert all(r.holds in (True, False) and r.residual >= 0 for r in reports)

    def test_check_accepts_names(self, rng):
        """check() accepts a condition name and rejects unknown names."""
        inst = random_instance(rng, "ols", "in_image")
        assert check("PROJ", inst.moments, inst.phi, inst.w).id is C.PROJ
        with pytest.raises(ValueError):
            check("NOT_A_CONDITION", inst.moments, inst.phi, inst.w)

    def test_phi_rank_note(self):
        """A rank-deficient Phi is reported with its rank."""
        phi = Characteristics([[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]])
        report = check(C.PHI_FULL_RANK, CrossSectionMoments(np.zeros(3), np.eye(3)), phi, build_ols(phi))
        assert not report.holds
        assert report.note == "rank 1 of 2"

    def test_spanning_witness(self, rng):
        """The spanning witness c satisfies Sigma W c = mu."""
        inst = random_instance(rng, "random", "spanned", n=5, m=3)
        report = check(C.SPANNING, inst.moments, inst.phi, inst.w)
        assert report.holds
        np.testing.assert_allclose(inst.moments.sigma @ inst.w.w @ report.witness, inst.moments.mu, atol=1e-8)

    def test_arbitrage_witness(self):
        """A failed NA check carries the kernel component of mu."""
        phi = Characteristics(np.eye(2)[:, :1])
        report = check(C.NA, CrossSectionMoments([1.0, 3.0], np.diag([1.0, 0.0])), phi, build_ols(phi))
        assert not report.holds
        np.testing.assert_allclose(report.witness, [0.0, 3.0], atol=1e-12)

    def test_residual_kernel_witness(self, rng):
        """SIGEPS_RANK_DEFICIENT returns a basis annihilated by Sigma_eps."""
        inst = random_instance(rng, "ols", "in_image", n=5, m=2)
        report = check(C.SIGEPS_RANK_DEFICIENT, inst.moments, inst.phi, inst.w)
        assert report.holds
        sigma_eps = derive_factor_moments(inst.moments, inst.phi, inst.w).sigma_eps
        np.testing.assert_allclose(sigma_eps @ report.witness, 0, atol=1e-10)

    def test_chars_are_covs_note(self, rng):
        """A singular factor Gram matrix is noted as a non-unique minimizer."""
        phi = Characteristics(np.ones((3, 2)))
        report = check(C.CHARS_ARE_COVS, CrossSectionMoments(np.zeros(3), np.eye(3)), phi, build_ols(phi))
        assert "not unique" in report.note

    def test_nondegenerate(self):
        """Phi W^T = 0 is degenerate."""
        phi = Characteristics(np.eye(3)[:, :1])
        assert is_nondegenerate(phi, build_ols(phi))
        assert not is_nondegenerate(phi, FactorWeights(np.zeros((3, 1))))


class TestSampleCrossSectionalOrthogonality:
    """Test CS_ORTHO on a realized return vector."""

    def test_holds_for_ols(self, rng):
        """OLS residuals are orthogonal to the spanned part on every draw."""
        phi = Characteristics(matrix_of_rank(rng, 4, 2, 2))
        for _ in range(10):
            report = check_cs_ortho_on_sample(ReturnSample(rng.standard_normal(4)), phi, build_ols(phi))
            assert report.holds
            assert report.note == "sample path"

    def test_holds_for_rotation(self, rng):
        """The skew part of the rotation case vanishes on every draw."""
        _, phi, w = _rotation_case()
        assert check_cs_ortho_on_sample(rng.standard_normal(2), phi, w).holds

    def test_fails_for_random_weights(self, rng):
        """Generic weights leave a nonzero inner product, reported as the witness."""
        phi = Characteristics(matrix_of_rank(rng, 4, 2, 2))
        w = FactorWeights(matrix_of_rank(rng, 4, 2, 2))
        x = rng.standard_normal(4)
        report = check_cs_ortho_on_sample(x, phi, w)
        assert not report.holds
        f = w.w.T @ x
        assert report.witness[0] == pytest.approx((phi.phi @ f) @ (x - phi.phi @ f))


class TestRandomCampaign:
    """Property campaign over random cross-sections."""

    def test_no_violated_edges(self, campaign):
        """No implication edge is ever violated."""
        violated = [
            (inst.kind, r.edge.name) for inst, _, graph in campaign for r in graph.results
            if r.status is EdgeStatus.VIOLATED
        ]
        assert violated == []

    def test_every_edge_is_exercised(self, campaign):
        """Each edge is confirmed (not just vacuous) on some instance."""
        confirmed = {r.edge.name for _, _, graph in campaign for r in graph.results if r.status is EdgeStatus.CONFIRMED}
        assert confirmed == {edge.name for edge in EDGES}

    def test_spanning_characterizations_agree(self, campaign):
        """Under NA, the four spanning characterizations agree pairwise."""
        checked = 0
        for inst, reports, _ in campaign:
            verdicts = _verdicts(reports)
            if not verdicts[C.NA]:
                continue
            checked += 1
            assert len({verdicts[cid] for cid in SPANNING_FAMILY}) == 1, inst.moments.date_label
        assert checked > 500

    def test_sharpe_ratios(self, campaign):
        """SR_f^2 equals SR^2 under spanning and never exceeds it otherwise."""
        both = set()
        for inst, reports, _ in campaign:
            verdicts = _verdicts(reports)
            if not verdicts[C.NA]:
                continue
            sr2 = mve(inst.moments).sr_squared
            sr_f2 = factor_mve(derive_factor_moments(inst.moments, inst.phi, inst.w)).sr_squared
            if verdicts[C.SPANNING]:
                assert abs(sr_f2 - sr2) <= 1e-8 * max(1.0, sr2)
            else:
                assert sr_f2 <= sr2 + 1e-8 * max(1.0, sr2)
            both.add(verdicts[C.SPANNING])
        assert both == {True, False}

    def test_residual_covariance_rank_deficient(self, campaign):
        """Whenever the tradable triple equality holds and Phi W^T != 0, Sigma_eps is singular."""
        hits = 0
        for inst, reports, _ in campaign:
            verdicts = _verdicts(reports)
            if verdicts[C.TRADABLE_TRIPLE_EQ] and is_nondegenerate(inst.phi, inst.w):
                hits += 1
                assert verdicts[C.SIGEPS_RANK_DEFICIENT], inst.moments.date_label
        assert hits > 50

    def test_covers_rank_profiles(self, campaign):
        """The campaign includes singular Sigma, rank-deficient Phi and m > n."""
        singular = deficient = wide = 0
        for inst, reports, _ in campaign:
            sigma_rank = np.linalg.matrix_rank(inst.moments.sigma)
            singular += sigma_rank < inst.moments.n
            deficient += not _verdicts(reports)[C.PHI_FULL_RANK]
            wide += inst.phi.m > inst.phi.n
        assert min(singular, deficient, wide) > 50


class TestStrictness:
    """One-sided edges have explicit counterexamples to their converses."""

    def test_orthogonal_residuals_without_uncorrelatedness(self):
        """EPS_ORTHO holds while FSPANNED_EPS_UNCORR fails in the three-asset example."""
        verdicts = _verdicts(run_all(*three_asset_instance(DEFAULT_PARAMS)))
        assert verdicts[C.EPS_ORTHO]
        assert verdicts[C.CS_ORTHO]
        assert not verdicts[C.FSPANNED_EPS_UNCORR]

    def test_unpriced_residuals_without_triple_equality(self):
        """RESID_UNPRICED and SPANNING hold in the continuation while TRADABLE_TRIPLE_EQ fails."""
        verdicts = _verdicts(run_all(*three_asset_instance(ThreeAssetParams.continuation())))
        assert verdicts[C.RESID_UNPRICED]
        assert verdicts[C.SPANNING]
        assert verdicts[C.W_IDEMPOTENT_ON_PHI]
        assert not verdicts[C.TRADABLE_TRIPLE_EQ]

    def test_fixtures_never_violate(self):
        """Neither fixture mode violates an edge."""
        for params in (DEFAULT_PARAMS, ThreeAssetParams.continuation()):
            moments, phi, w = three_asset_instance(params)
            graph = verify_implication_graph(run_all(moments, phi, w), is_nondegenerate(phi, w))
            assert graph.ok


class TestRotationCounterexamples:
    """P = (I + J)/2 with J a quarter rotation separates guarded edges from unguarded ones."""

    def test_condition_pattern(self):
        """CS_ORTHO and SIGMA_DECOMP hold but PROJ, EPS_ORTHO and FSPANNED_EPS_UNCORR fail."""
        verdicts = _verdicts(run_all(*_rotation_case()))
        assert verdicts[C.CS_ORTHO]
        assert verdicts[C.SIGMA_DECOMP]
        assert not verdicts[C.PROJ]
        assert not verdicts[C.EPS_ORTHO]
        assert not verdicts[C.FSPANNED_EPS_UNCORR]

    def test_guarded_graph_holds(self):
        """The shipped edges are satisfied."""
        moments, phi, w = _rotation_case()
        assert verify_implication_graph(run_all(moments, phi, w), is_nondegenerate(phi, w)).ok

    @pytest.mark.parametrize(
        "edge",
        [
            Edge((C.CS_ORTHO,), (C.EPS_ORTHO,)),
            Edge((C.SIGMA_DECOMP,), (C.FSPANNED_EPS_UNCORR,)),
        ],
        ids=lambda e: e.name,
    )
    def test_unguarded_edges_fail(self, edge):
        """Dropping PROJ from the premises makes these edges fail."""
        moments, phi, w = _rotation_case()
        graph = verify_implication_graph(run_all(moments, phi, w), True, edges=[edge])
        assert graph.status_of(edge.name) is EdgeStatus.VIOLATED


class TestGraphMechanics:
    """Test edge evaluation and naming."""

    def test_edge_names(self):
        """Names render premises, arrow, conclusions and guard."""
        edge = Edge((C.SPANNING,), (C.SR_EQUALITY,), equivalence=True, guard=(C.NA,))
        assert edge.name == "SPANNING <=> SR_EQUALITY [given NA]"
        assert Edge((C.EPS_ORTHO, NONDEGENERATE), (C.SIGEPS_RANK_DEFICIENT,)).name == (
            "EPS_ORTHO & NONDEGENERATE => SIGEPS_RANK_DEFICIENT"
        )

    def test_vacuous_when_guard_fails(self):
        """Guarded edges are vacuous under arbitrage."""
        phi = Characteristics(np.eye(2)[:, :1])
        moments = CrossSectionMoments([1.0, 1.0], np.diag([1.0, 0.0]))
        edge = Edge((C.SPANNING,), (C.SR_EQUALITY,), equivalence=True, guard=(C.NA,))
        graph = verify_implication_graph(run_all(moments, phi, build_ols(phi)), True, edges=[edge])
        assert graph.status_of(edge.name) is EdgeStatus.VACUOUS

    def test_unknown_edge_name(self, rng):
        """status_of raises KeyError for unknown names."""
        inst = random_instance(rng, "ols", "zero")
        graph = verify_implication_graph(run_all(inst.moments, inst.phi, inst.w), True)
        with pytest.raises(KeyError):
            graph.status_of("no such edge")


class TestDegenerateScales:
    """Rank and Sharpe decisions when the natural scale of a cross-section vanishes."""

    @pytest.mark.parametrize("sigma_rank", [0, 2], ids=["zero-sigma", "full-sigma"])
    def test_identity_projection_from_wide_phi(self, rng, sigma_rank):
        """Phi of shape (2, 3) with general-form weights gives P = I, so Sigma_eps is rounding residue."""
        phi = Characteristics(matrix_of_rank(rng, 2, 3, 2))
        w = build_general_form(phi, matrix_of_rank(rng, 3, 3, 3), matrix_of_rank(rng, 2, 2, 2))
        moments = CrossSectionMoments(np.zeros(2), psd_of_rank(rng, 2, sigma_rank), "wide-phi")
        reports = run_all(moments, phi, w)
        by_id = {r.id: r for r in reports}
        assert by_id[C.EPS_ORTHO].holds
        assert by_id[C.SIGEPS_RANK_DEFICIENT].holds
        assert by_id[C.SIGEPS_RANK_DEFICIENT].note == "rank 0 of 2"
        assert is_nondegenerate(phi, w)
        assert verify_implication_graph(reports, True).ok

    def test_sharpe_gap_residual(self):
        """SR_EQUALITY reports (SR^2 - SR_f^2) / max(1, SR^2), not its square root."""
        phi = Characteristics(np.array([[1.0], [0.0]]))
        report = check(C.SR_EQUALITY, CrossSectionMoments([1.0, 1.0], np.eye(2)), phi, build_ols(phi))
        assert not report.holds
        assert report.residual == pytest.approx(0.5)

    def test_spanned_means_close_the_gap(self):
        """Spanned means satisfy every spanning characterization, SR_EQUALITY included."""
        rng = np.random.default_rng(99)
        for i in range(300):
            inst = random_instance(rng, ("ols", "gls", "general_form", "random")[i % 4], "spanned")
            verdicts = _verdicts(run_all(inst.moments, inst.phi, inst.w))
            assert verdicts[C.NA]
            assert all(verdicts[cid] for cid in SPANNING_FAMILY), inst.moments.date_label

    def test_no_violated_edges(self, degenerate_campaign):
        """No edge is violated on degenerate draws."""
        violated = [
            (inst.moments.date_label, r.edge.name)
            for inst, _, graph in degenerate_campaign
            for r in graph.results
            if r.status is EdgeStatus.VIOLATED
        ]
        assert violated == []

    def test_spanning_characterizations_agree(self, degenerate_campaign):
        """Under NA the four spanning characterizations agree on degenerate draws."""
        checked = 0
        for inst, reports, _ in degenerate_campaign:
            verdicts = _verdicts(reports)
            if verdicts[C.NA]:
                checked += 1
                assert len({verdicts[cid] for cid in SPANNING_FAMILY}) == 1, inst.moments.date_label
        assert checked > 250

    def test_covers_degenerate_inputs(self, degenerate_campaign):
        """The campaign includes zero Sigma, zero mu and noise-level eigenvalues."""
        zero_sigma = zero_mu = noisy = 0
        for inst, _, _ in degenerate_campaign:
            eigenvalues = np.linalg.eigvalsh(inst.moments.sigma)
            zero_sigma += not np.any(inst.moments.sigma)
            zero_mu += not np.any(inst.moments.mu)
            noisy += bool(np.any((eigenvalues > 1e-13) & (eigenvalues < 1e-11)))
        assert min(zero_sigma, zero_mu, noisy) > 20

"""
Implication Graph.

Known implications and equivalences between conditions are encoded as edges
and re-checked on evaluated reports. An edge is VIOLATED only when its
guard and premises hold but its conclusion does not (or, for an
equivalence, the two sides disagree under the guard). That outcome is an
implementation bug, never a property of valid data.

Notes on guards:
- CS_ORTHO implies EPS_ORTHO only together with PROJ; a non-idempotent
  P = (I + J)/2 with J a quarter rotation is cross-sectionally orthogonal
  for every x but violates EPS_ORTHO.
- SIGMA_DECOMP implies FSPANNED_EPS_UNCORR only under PROJ; the same P
  gives a skew-symmetric nonzero cross covariance.
- Pricing edges assume weak no-arbitrage.
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

from linfac.diagnostics.conditions import ConditionId, ConditionReport

logger = logging.getLogger(__name__)

C = ConditionId

# Pseudo-condition for Phi W^T != 0, usable in guards and premises.
NONDEGENERATE = "NONDEGENERATE"


class EdgeStatus(str, Enum):
    VACUOUS = "vacuous"
    CONFIRMED = "confirmed"
    VIOLATED = "VIOLATED"


@dataclass(frozen=True)
class Edge:
    """
    One implication (or equivalence) between conjunctions of conditions.

    Attributes:
        premises: Conditions that must all hold
        conclusions: Conditions implied by the premises
        equivalence: Whether the conclusions also imply the premises
        guard: Standing assumptions; the edge is vacuous when any fails
        name: Human-readable label, derived from the conditions when empty
    """

    premises: tuple[str, ...]
    conclusions: tuple[str, ...]
    equivalence: bool = False
    guard: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.name:
            arrow = " <=> " if self.equivalence else " => "
            label = " & ".join(map(_label, self.premises)) + arrow + " & ".join(map(_label, self.conclusions))
            if self.guard:
                label += " [given " + " & ".join(map(_label, self.guard)) + "]"
            object.__setattr__(self, "name", label)


def _label(cid) -> str:
    return cid.value if isinstance(cid, ConditionId) else str(cid)


EDGES: tuple[Edge, ...] = (
    # Main graph
    Edge((C.TRADABLE_TRIPLE_EQ,), (C.EPS_ORTHO,)),
    Edge((C.EPS_ORTHO, NONDEGENERATE), (C.SIGEPS_RANK_DEFICIENT,)),
    Edge((C.W_IDEMPOTENT_ON_PHI, C.PROJ_SELF_ADJOINT), (C.CS_ORTHO,)),
    Edge((C.CS_ORTHO, C.PROJ), (C.EPS_ORTHO,)),
    Edge((C.F_EPS_UNCORR,), (C.EPS_ORTHO,)),
    Edge((C.TRADABLE_TRIPLE_EQ, C.W_IDEMPOTENT_ON_PHI, C.SPANNING), (C.RESID_UNPRICED,)),
    Edge((C.F_EPS_UNCORR, C.RESID_UNPRICED), (C.CHARS_ARE_COVS,)),
    Edge((C.TRADABLE_TRIPLE_EQ, C.RESID_UNPRICED), (C.SPANNING,), guard=(C.NA,)),
    Edge((C.F_EPS_UNCORR, C.RESID_UNPRICED), (C.SPANNING,), guard=(C.NA,)),
    Edge((C.SPANNING,), (C.SR_EQUALITY,), equivalence=True, guard=(C.NA,)),
    # Uncorrelatedness and covariance decomposition
    Edge((C.FSPANNED_EPS_UNCORR,), (C.SIGMA_DECOMP,)),
    Edge((C.SIGMA_DECOMP, C.PROJ), (C.FSPANNED_EPS_UNCORR,)),
    Edge((C.FSPANNED_EPS_UNCORR,), (C.TRADABLE_TRIPLE_EQ,), equivalence=True),
    Edge((C.TRADABLE_TRIPLE_EQ,), (C.F_EPS_UNCORR,), equivalence=True, guard=(C.TRIVIAL_INTERSECT,)),
    Edge((C.FSPANNED_EPS_UNCORR,), (C.F_EPS_UNCORR,), equivalence=True, guard=(C.PHI_FULL_RANK,)),
    Edge((C.F_EPS_UNCORR,), (C.FSPANNED_EPS_UNCORR,)),
    Edge((C.TRADABLE_TRIPLE_EQ, NONDEGENERATE), (C.SIGEPS_RANK_DEFICIENT,)),
    # Projection structure of Phi W^T
    Edge((C.PROJ,), (C.EPS_ORTHO,)),
    Edge((C.PROJ, C.PROJ_SELF_ADJOINT), (C.CS_ORTHO,)),
    Edge((C.W_IDEMPOTENT_ON_PHI,), (C.TRIVIAL_INTERSECT, C.PROJ), equivalence=True),
    # Risk premia and spanning
    Edge((C.RESID_UNPRICED,), (C.MU_REPRODUCED,), equivalence=True),
    Edge((C.W_IDEMPOTENT_ON_PHI, C.RESID_UNPRICED, C.SPANNING), (C.LEMCEX_VECTOR_EQ,)),
    Edge((C.SPANNING,), (C.MVE_SPANNED,), equivalence=True, guard=(C.NA,)),
    Edge((C.SPANNING,), (C.SDF_SPANNED,), equivalence=True, guard=(C.NA,)),
    Edge((C.SR_EQUALITY,), (C.MVE_SPANNED,), equivalence=True, guard=(C.NA,)),
)


@dataclass(frozen=True)
class EdgeResult:
    edge: Edge
    status: EdgeStatus


@dataclass
class ImplicationGraphReport:
    """Per-edge statuses; ok iff no edge is VIOLATED."""

    results: list[EdgeResult] = field(default_factory=list)

    @property
    def violated(self) -> list[EdgeResult]:
        return [r for r in self.results if r.status is EdgeStatus.VIOLATED]

    @property
    def ok(self) -> bool:
        return not self.violated

    def status_of(self, name: str) -> EdgeStatus:
        """Status of the edge with the given name."""
        for result in self.results:
            if result.edge.name == name:
                return result.status
        raise KeyError(name)


def _evaluate(edge: Edge, truth: dict[str, bool]) -> EdgeStatus:
    if not all(truth[_label(g)] for g in edge.guard):
        return EdgeStatus.VACUOUS
    lhs = all(truth[_label(p)] for p in edge.premises)
    rhs = all(truth[_label(c)] for c in edge.conclusions)
    if edge.equivalence:
        return EdgeStatus.CONFIRMED if lhs == rhs else EdgeStatus.VIOLATED
    if not lhs:
        return EdgeStatus.VACUOUS
    return EdgeStatus.CONFIRMED if rhs else EdgeStatus.VIOLATED


def verify_implication_graph(
    reports: Iterable[ConditionReport],
    nondegenerate: bool,
    edges: Iterable[Edge] = EDGES,
) -> ImplicationGraphReport:
    """
    Evaluate every edge against one cross-section's reports.

    Args:
        reports: Output of run_all (every ConditionId present)
        nondegenerate: Whether Phi W^T is materially nonzero
        edges: Edges to check (defaults to the full graph)

    Raises:
        KeyError: If a condition used by an edge has no report
    """
    truth: dict[str, bool] = {r.id.value: r.holds for r in reports}
    truth[NONDEGENERATE] = nondegenerate
    report = ImplicationGraphReport([EdgeResult(edge, _evaluate(edge, truth)) for edge in edges])
    for result in report.violated:
        logger.error("Implication edge violated: %s", result.edge.name)
    return report

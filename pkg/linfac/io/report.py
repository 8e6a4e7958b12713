"""
Panel Diagnostics Runner and Report Serialization.

Runs validation, every condition check, the implication graph, the MVE
and SDF computations and (for generative dates) the GLS-type verification
over each date of a panel. Dates are independent and may be processed on a
thread pool; records always come back in input order.

Exit status of a run:
    0  every date valid and no implication edge violated
    1  at least one per-date data error
    3  at least one implication edge VIOLATED (takes precedence over 1)
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from linfac import __version__
from linfac.config import RunConfig
from linfac.core.linalg import LinalgError, Tolerance
from linfac.core.model import (
    ModelError,
    PanelEntry,
    PanelSequence,
    derive_factor_moments,
    validate_cross_section,
)
from linfac.diagnostics.conditions import ConditionReport, is_nondegenerate, run_all
from linfac.diagnostics.graph import ImplicationGraphReport, verify_implication_graph
from linfac.factors.builders import BuilderError, build_from_recipe
from linfac.factors.generative import GenerativeSpecError, SpanningReport, verify_generative_spanning
from linfac.pricing.portfolio import ArbitrageError, PortfolioError, factor_mve, mve, sdf, sharpe_gap

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2
EXIT_VIOLATION = 3

_DATA_ERRORS = (LinalgError, ModelError, BuilderError, PortfolioError, GenerativeSpecError)


class DiagnosticsError(Exception):
    """Raised in strict mode on the first per-date data error."""

    def __init__(self, date_label: str, message: str):
        self.date_label = date_label
        super().__init__(f"date {date_label!r}: {message}")


@dataclass(eq=False)
class DateDiagnostics:
    """
    Everything computed for one date.

    When error is set the date could not be processed and only the fields
    computed before the failure are filled in.
    """

    date_label: str
    n: int
    m: int
    violations: list[str] = field(default_factory=list)
    error: str | None = None
    conditions: list[ConditionReport] = field(default_factory=list)
    graph: ImplicationGraphReport | None = None
    sr_squared: float | None = None
    sr_f_squared: float | None = None
    sharpe_gap: float | None = None
    mve_weights: np.ndarray | None = None
    factor_mve_weights: np.ndarray | None = None
    sdf: dict[str, Any] | None = None
    notes: list[str] = field(default_factory=list)
    generative: SpanningReport | None = None

    @property
    def misaligned(self) -> bool:
        return self.generative is not None and "aligned" in self.generative.failed

    @property
    def data_error(self) -> bool:
        return self.error is not None or bool(self.violations) or self.misaligned

    @property
    def violated(self) -> bool:
        if self.graph is not None and not self.graph.ok:
            return True
        return self.generative is not None and not self.generative.passed and not self.misaligned


@dataclass(eq=False)
class DiagnosticsOutput:
    """Per-date records in input order plus run metadata."""

    dates: list[DateDiagnostics] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if any(d.violated for d in self.dates):
            return EXIT_VIOLATION
        if any(d.data_error for d in self.dates):
            return EXIT_DATA_ERROR
        return EXIT_OK


def _diagnose_date(entry: PanelEntry, tol: Tolerance) -> DateDiagnostics:
    moments, phi = entry.moments, entry.phi
    result = DateDiagnostics(entry.date_label, phi.n, phi.m)
    try:
        weights = entry.weights
        if weights is None:
            if entry.recipe is None:
                raise ModelError("date has neither weights nor a recipe")
            weights = build_from_recipe(entry.recipe, phi, entry.spec, tol)

        result.violations = validate_cross_section(moments, phi, weights, tol).violations
        if result.violations:
            return result

        result.conditions = run_all(moments, phi, weights, tol)
        result.graph = verify_implication_graph(result.conditions, is_nondegenerate(phi, weights, tol))
        if entry.spec is not None:
            result.generative = verify_generative_spanning(entry.spec, tol)

        try:
            best = mve(moments, tol)
            result.sr_squared = best.sr_squared
            result.mve_weights = best.weights
            result.sharpe_gap = sharpe_gap(moments, weights, tol)
            coefs = sdf(moments, tol)
            result.sdf = {
                "intercept": coefs.intercept,
                "loadings": coefs.loadings,
                "moment_pricing_error": coefs.moment_pricing_error,
            }
        except ArbitrageError as e:
            result.notes.append(f"asset MVE and SDF skipped: {e}")

        factor_best = factor_mve(derive_factor_moments(moments, phi, weights, tol), tol)
        result.sr_f_squared = factor_best.sr_squared
        result.factor_mve_weights = factor_best.weights
    except _DATA_ERRORS as e:
        result.error = str(e)
        logger.warning("Date %r: %s", entry.date_label, e)
    return result


def run_diagnostics(panel: PanelSequence, config: RunConfig | None = None) -> DiagnosticsOutput:
    """
    Diagnose every date of a panel.

    Args:
        panel: Parsed panel; dates may differ in n
        config: Run settings (tolerances, workers, strict); defaults when omitted

    Raises:
        DiagnosticsError: In strict mode, for the first date (in input order)
            with a data error
    """
    config = config or RunConfig()
    tol = config.tolerance()
    entries = list(panel)
    if config.workers > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            dates = list(pool.map(lambda e: _diagnose_date(e, tol), entries))
    else:
        dates = [_diagnose_date(e, tol) for e in entries]

    if config.strict:
        for d in dates:
            if d.data_error:
                reason = d.error or "; ".join(d.violations) or "generative spec fails the alignment precondition"
                raise DiagnosticsError(d.date_label, reason)

    metadata = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "seed": config.seed,
        "tolerance": {"rel_rank_tol": tol.rel_rank_tol, "abs_residual_tol": tol.abs_residual_tol},
        "dates": len(dates),
    }
    output = DiagnosticsOutput(dates, metadata)
    violated = sum(d.violated for d in dates)
    if violated:
        logger.error("%d date(s) violate the implication graph", violated)
    logger.info("Diagnosed %d date(s), exit status %d", len(dates), output.exit_code)
    return output


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _condition_dict(report: ConditionReport) -> dict[str, Any]:
    return {
        "id": report.id.value,
        "holds": report.holds,
        "residual": report.residual,
        "witness": _plain(report.witness),
        "note": report.note,
    }


def date_to_dict(d: DateDiagnostics) -> dict[str, Any]:
    """JSON-ready form of one date's diagnostics."""
    record: dict[str, Any] = {
        "label": d.date_label,
        "n": d.n,
        "m": d.m,
        "valid": not d.data_error,
        "violations": list(d.violations),
        "error": d.error,
        "conditions": [_condition_dict(r) for r in d.conditions],
        "implication_graph": None,
        "sharpe": {"sr_squared": d.sr_squared, "sr_f_squared": d.sr_f_squared, "gap": d.sharpe_gap},
        "mve_weights": _plain(d.mve_weights),
        "factor_mve_weights": _plain(d.factor_mve_weights),
        "sdf": _plain(d.sdf),
        "notes": list(d.notes),
    }
    if d.graph is not None:
        record["implication_graph"] = {
            "ok": d.graph.ok,
            "edges": [{"edge": r.edge.name, "status": r.status.value} for r in d.graph.results],
        }
    if d.generative is not None:
        record["generative"] = {
            "passed": d.generative.passed,
            "checks": {
                name: {"holds": c.holds, "residual": c.residual} for name, c in d.generative.checks.items()
            },
        }
    return record


def to_dict(output: DiagnosticsOutput) -> dict[str, Any]:
    return {
        "metadata": output.metadata,
        "exit_code": output.exit_code,
        "dates": [date_to_dict(d) for d in output.dates],
    }


def to_json(output: DiagnosticsOutput) -> str:
    """Deterministic JSON rendering (fixed key order, repr-exact floats)."""
    return json.dumps(to_dict(output), indent=2) + "\n"


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6g}"


def render_text(output: DiagnosticsOutput) -> str:
    """Human-readable summary of a run."""
    meta = output.metadata
    tol = meta.get("tolerance", {})
    lines = [
        f"linfac {meta.get('version', '?')}  seed={meta.get('seed')}  "
        f"rel_rank_tol={tol.get('rel_rank_tol')}  abs_residual_tol={tol.get('abs_residual_tol')}",
        f"{len(output.dates)} date(s), exit status {output.exit_code}",
    ]
    for d in output.dates:
        lines.append("")
        lines.append(f"[{d.date_label}] n={d.n} m={d.m}")
        if d.error:
            lines.append(f"  ERROR: {d.error}")
        for violation in d.violations:
            lines.append(f"  INVALID: {violation}")
        if d.conditions:
            width = max(len(r.id.value) for r in d.conditions)
            for r in d.conditions:
                mark = "yes" if r.holds else "no"
                note = f"  ({r.note})" if r.note else ""
                lines.append(f"  {r.id.value:<{width}}  {mark:<3}  {r.residual:.2e}{note}")
        if d.graph is not None:
            if d.graph.ok:
                lines.append(f"  implication graph: {len(d.graph.results)} edge(s), none violated")
            for r in d.graph.violated:
                lines.append(f"  VIOLATED: {r.edge.name}")
        if d.conditions:
            lines.append(
                f"  SR^2={_fmt(d.sr_squared)}  SR_f^2={_fmt(d.sr_f_squared)}  gap={_fmt(d.sharpe_gap)}"
            )
        for note in d.notes:
            lines.append(f"  note: {note}")
        if d.generative is not None:
            status = "pass" if d.generative.passed else f"FAIL ({', '.join(d.generative.failed)})"
            lines.append(f"  GLS-type verification: {status}")
    return "\n".join(lines) + "\n"

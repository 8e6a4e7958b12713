"""
Linfac - Diagnostics for conditional linear factor models with tradable factors.

This is the main package that exports the public API. Per-date moments,
characteristics and factor weights go in; condition verdicts, implication
graph checks, mean-variance and SDF quantities come out.
"""

__version__ = "0.1.0"

from types import SimpleNamespace

from linfac.core.model import (
    Characteristics,
    CrossSectionMoments,
    FactorWeights,
    PanelEntry,
    PanelSequence,
    ReturnSample,
    derive_factor_moments,
)
from linfac.diagnostics import conditions, graph
from linfac.factors import builders, generative
from linfac.pricing import portfolio

# Weight construction API namespace
weights = SimpleNamespace(
    ols=builders.build_ols,
    gls=builders.build_gls,
    general_form=builders.build_general_form,
    gls_type=builders.build_gls_type_generative,
    from_recipe=builders.build_from_recipe,
)

# Diagnostics API namespace
diagnose = SimpleNamespace(
    check=conditions.check,
    run_all=conditions.run_all,
    graph=graph.verify_implication_graph,
    on_sample=conditions.check_cs_ortho_on_sample,
)

# Portfolio API namespace
pricing = SimpleNamespace(
    no_arbitrage=portfolio.check_no_arbitrage,
    mve=portfolio.mve,
    factor_mve=portfolio.factor_mve,
    sdf=portfolio.sdf,
    sharpe_gap=portfolio.sharpe_gap,
)

# Generative model API namespace
model = SimpleNamespace(
    Spec=generative.GenerativeSpec,
    implied_moments=generative.implied_moments,
    verify=generative.verify_generative_spanning,
    simulate=generative.simulate_returns,
    simulate_panel=generative.simulate_panel,
)

__all__ = [
    "__version__",
    "Characteristics",
    "CrossSectionMoments",
    "FactorWeights",
    "PanelEntry",
    "PanelSequence",
    "ReturnSample",
    "derive_factor_moments",
    "diagnose",
    "model",
    "pricing",
    "weights",
]

"""
lfd generate command.

Simulate one return draw per date from a generative spec, or with
--as-moments emit a moment file carrying the spec on every date.
"""

from typing import Any

from lfd.cli import LFDError, emit, run_config
from linfac.core.model import PanelEntry, PanelSequence
from linfac.factors.builders import RecipeKind, WeightRecipe
from linfac.factors.generative import GenerativeSpecError, implied_moments, simulate_panel
from linfac.io.moment_file import (
    MomentFileError,
    load_generative_spec,
    serialize_panel,
    serialize_returns,
)


def generate_command(args: Any) -> int:
    """Execute the generate command."""
    config = run_config(args)
    try:
        spec = load_generative_spec(args.spec)
    except MomentFileError as e:
        raise LFDError(f"{args.spec}: {e}") from e

    if args.as_moments:
        recipe = WeightRecipe(RecipeKind.GLS_TYPE_GENERATIVE)
        entries = [
            PanelEntry(implied_moments(spec, f"t{t}"), spec.phi, recipe=recipe, spec=spec)
            for t in range(args.dates)
        ]
        emit(serialize_panel(PanelSequence(entries)), args)
        return 0

    try:
        samples = simulate_panel(spec, args.dates, config.seed)
    except GenerativeSpecError as e:
        raise LFDError(str(e)) from e
    emit(serialize_returns(samples, config.seed), args)
    return 0

"""
lfd fixture command.

Emit the three-asset counterexample as a moment file with an OLS recipe.
"""

from typing import Any

from lfd.cli import LFDError, emit
from linfac.core.model import PanelEntry, PanelSequence
from linfac.factors.builders import RecipeKind, WeightRecipe
from linfac.fixtures.three_asset import DEFAULT_PARAMS, FixtureError, ThreeAssetParams, three_asset_instance
from linfac.io.moment_file import serialize_panel


def fixture_command(args: Any) -> int:
    """
    Execute the fixture command.

    With --continuation, b2 and b3 are replaced by their continuation values
    computed from a1, a2, a3, b1 and rho.
    """
    try:
        params = ThreeAssetParams.from_sequence(args.params) if args.params else DEFAULT_PARAMS
        if args.continuation:
            params = ThreeAssetParams.continuation(params.a1, params.a2, params.a3, params.b1, params.rho)
    except FixtureError as e:
        raise LFDError(str(e)) from e

    label = "three-asset-continuation" if args.continuation else "three-asset"
    moments, phi, _ = three_asset_instance(params, label)
    entry = PanelEntry(moments, phi, recipe=WeightRecipe(RecipeKind.OLS))
    emit(serialize_panel(PanelSequence([entry])), args)
    return 0

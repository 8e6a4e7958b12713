"""
Tests for the Moment File Format.

This test suite covers:
1. Parsing unbalanced panels with explicit weights and recipes
2. Generative records and spec files
3. Exact serialization (bit-identical floats, stable text)
4. Error reporting with record index and field name
5. Returns files and standard input
"""

import io

import numpy as np
import pytest

from linfac.core.model import CrossSectionMoments, PanelEntry
from linfac.factors.builders import RecipeKind
from linfac.factors.generative import random_spec, simulate_panel
from linfac.io.moment_file import (
    MomentFileError,
    dump_generative_spec,
    load_generative_spec,
    parse_moment_file,
    parse_moment_text,
    parse_returns,
    serialize_panel,
    serialize_returns,
)

HEADER = 'format = "linfac-moments"\nversion = 1\n'

THREE_ASSET = """
[[date]]
label = "2024-01"
n = 3
m = 2
mu = [1.0, 3.0, 3.25]
sigma = [[1.0, 0.0, 0.5], [0.0, 2.0, 0.5], [0.5, 0.5, 4.75]]
phi = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]

[date.recipe]
kind = "ols"
"""

FIVE_ASSET = """
[[date]]
label = "2024-02"
n = 5
m = 2
mu = [0.1, 0.2, 0.3, 0.4, 0.5]
sigma = [[1.0, 0, 0, 0, 0], [0, 1.0, 0, 0, 0], [0, 0, 1.0, 0, 0], [0, 0, 0, 1.0, 0], [0, 0, 0, 0, 1.0]]
phi = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.0], [0.0, 0.5]]
w = [[0.2, 0.0], [0.0, 0.2], [0.2, 0.2], [0.2, 0.0], [0.0, 0.2]]
"""

GENERATIVE = """
[[date]]
label = "g"
n = 2
m = 1
phi = [[1.0], [2.0]]

[date.recipe]
kind = "gls_type_generative"

[date.generative]
mu_g = [0.5]
sigma_g = [[2.0]]
sigma_eta = [[0.5, 0.0], [0.0, 0.0]]
"""


def _error(text: str) -> MomentFileError:
    with pytest.raises(MomentFileError) as exc:
        parse_moment_text(text)
    return exc.value


class TestParse:
    """Test parsing well-formed files."""

    def test_unbalanced_panel(self):
        """Dates with n = 3 and n = 5 share m = 2."""
        panel = parse_moment_text(HEADER + THREE_ASSET + FIVE_ASSET)
        assert len(panel) == 2
        assert [e.phi.n for e in panel] == [3, 5]
        assert panel.m == 2
        first, second = panel
        assert first.date_label == "2024-01"
        assert first.recipe.kind is RecipeKind.OLS
        assert first.weights is None
        np.testing.assert_array_equal(first.moments.mu, [1.0, 3.0, 3.25])
        assert second.weights.w.shape == (5, 2)
        assert second.recipe is None

    def test_header_optional(self):
        """A file without format and version is accepted."""
        assert len(parse_moment_text(THREE_ASSET)) == 1

    def test_empty_panel(self):
        """A header alone is an empty panel."""
        panel = parse_moment_text(HEADER)
        assert len(panel) == 0

    def test_default_label(self):
        """Records without a label are named by index."""
        panel = parse_moment_text(THREE_ASSET.replace('label = "2024-01"\n', ""))
        assert panel[0].date_label == "date-0"

    def test_generative_record(self):
        """A generative table supplies the implied moments and the spec."""
        entry = parse_moment_text(HEADER + GENERATIVE)[0]
        assert entry.spec is not None
        np.testing.assert_allclose(entry.moments.mu, [0.5, 1.0])
        np.testing.assert_allclose(entry.moments.sigma, [[2.5, 4.0], [4.0, 8.0]])
        assert entry.recipe.kind is RecipeKind.GLS_TYPE_GENERATIVE

    def test_path_and_stdin(self, tmp_path, monkeypatch):
        """Files are read from a path or from standard input."""
        path = tmp_path / "moments.toml"
        path.write_text(HEADER + THREE_ASSET)
        assert len(parse_moment_file(path)) == 1
        assert len(parse_moment_file(str(path))) == 1
        monkeypatch.setattr("sys.stdin", io.StringIO(HEADER + FIVE_ASSET))
        assert parse_moment_file("-")[0].phi.n == 5


class TestSerialize:
    """Test serialization."""

    @pytest.mark.parametrize("body", [THREE_ASSET + FIVE_ASSET, GENERATIVE], ids=["moments", "generative"])
    def test_stable_text(self, body):
        """Serializing a parsed serialization reproduces the text byte for byte."""
        once = serialize_panel(parse_moment_text(HEADER + body))
        twice = serialize_panel(parse_moment_text(once))
        assert once == twice
        assert once.startswith(HEADER)

    def test_floats_bit_identical(self, rng):
        """Arbitrary doubles survive a write and read unchanged."""
        text = HEADER + THREE_ASSET
        panel = parse_moment_text(text)
        mu = rng.standard_normal(3) * 10.0 ** rng.integers(-20, 20, size=3)
        entry = panel[0]
        noisy = PanelEntry(
            CrossSectionMoments(mu, entry.moments.sigma, "noisy"), entry.phi, None, entry.recipe
        )
        parsed = parse_moment_text(serialize_panel([noisy]))[0]
        assert np.array_equal(parsed.moments.mu, mu)
        assert parsed.date_label == "noisy"

    def test_generative_record_keeps_spec(self):
        """Generative records are written without mu and sigma."""
        text = serialize_panel(parse_moment_text(HEADER + GENERATIVE))
        assert "[date.generative]" in text
        assert "\nmu = " not in text
        assert "sigma_eta" in text

    def test_empty(self):
        """An empty panel serializes to the header."""
        assert parse_moment_text(serialize_panel([])).m is None


class TestErrors:
    """Test error reporting."""

    def test_wrong_row_count_names_record_and_field(self):
        """A short sigma in the second record is reported as record 1, field 'sigma'."""
        bad = FIVE_ASSET.replace("[0, 0, 0, 0, 1.0]]", "]").replace(", ]", "]")
        error = _error(HEADER + THREE_ASSET + bad)
        assert error.record == 1
        assert error.field == "sigma"
        assert str(error).startswith("record 1, field 'sigma': has 4 rows, expected 5")

    def test_non_finite(self):
        """NaN entries are rejected."""
        error = _error(THREE_ASSET.replace("mu = [1.0, 3.0, 3.25]", "mu = [1.0, nan, 3.25]"))
        assert error.field == "mu"
        assert "non-finite" in str(error)

    @pytest.mark.parametrize(
        "edit",
        [
            lambda t: t.replace('\n[date.recipe]\nkind = "ols"\n', ""),
            lambda t: t.replace("m = 2\n", "m = 2\nw = [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]\n"),
        ],
        ids=["neither", "both"],
    )
    def test_weights_or_recipe(self, edit):
        """Exactly one of w and recipe is required."""
        error = _error(edit(THREE_ASSET))
        assert "exactly one" in str(error)
        assert error.record == 0

    def test_unknown_recipe_kind(self):
        """Unknown recipe kinds list the valid ones."""
        error = _error(THREE_ASSET.replace('kind = "ols"', 'kind = "ridge"'))
        assert error.field == "recipe.kind"
        assert "gls_type_generative" in str(error)

    def test_recipe_missing_matrix(self):
        """A gls recipe without sigma_eps is rejected."""
        error = _error(THREE_ASSET.replace('kind = "ols"', 'kind = "gls"'))
        assert error.field == "recipe"

    def test_generative_recipe_needs_table(self):
        """gls_type_generative without a generative table is a data error."""
        error = _error(THREE_ASSET.replace('kind = "ols"', 'kind = "gls_type_generative"'))
        assert error.field == "recipe"

    def test_generative_excludes_moments(self):
        """A generative record may not also give mu."""
        error = _error(GENERATIVE.replace("phi = [[1.0], [2.0]]", "phi = [[1.0], [2.0]]\nmu = [0.0, 0.0]"))
        assert "replaces" in str(error)

    def test_unknown_key(self):
        """Unknown record keys are rejected."""
        error = _error(THREE_ASSET.replace("m = 2\n", "m = 2\ncolour = 1\n"))
        assert "colour" in str(error)

    def test_factor_count_mismatch(self):
        """Dates must agree on m."""
        one_factor = (
            '\n[[date]]\nn = 1\nm = 1\nmu = [0.0]\nsigma = [[1.0]]\nphi = [[1.0]]\nw = [[1.0]]\n'
        )
        assert _error(HEADER + THREE_ASSET + one_factor).field == "m"

    def test_wrong_format(self):
        """A returns file is not a moment file."""
        assert _error('format = "linfac-returns"\n').field == "format"
        assert _error('version = 2\n').field == "version"

    def test_syntax_error_has_position(self):
        """Malformed TOML reports line and column."""
        assert "line" in str(_error(HEADER + "[[date]\n"))

    def test_missing_file(self, tmp_path):
        """An unreadable path raises MomentFileError."""
        with pytest.raises(MomentFileError, match="cannot read"):
            parse_moment_file(tmp_path / "absent.toml")


class TestSpecAndReturnsFiles:
    """Test generative spec and returns files."""

    def test_spec_roundtrip(self, rng):
        """A dumped spec loads back with identical arrays."""
        spec = random_spec(rng, 4, 2, eta_rank=2)
        loaded = load_generative_spec(io.StringIO(dump_generative_spec(spec)))
        np.testing.assert_array_equal(loaded.phi.phi, spec.phi.phi)
        np.testing.assert_array_equal(loaded.mu_g, spec.mu_g)
        np.testing.assert_array_equal(loaded.sigma_g, spec.sigma_g)
        np.testing.assert_array_equal(loaded.sigma_eta, spec.sigma_eta)

    def test_invalid_spec(self):
        """An invalid spec is reported under the generative field."""
        text = "[generative]\nphi = [[1.0]]\nmu_g = [0.0]\nsigma_g = [[0.0]]\nsigma_eta = [[1.0]]\n"
        with pytest.raises(MomentFileError, match="positive definite") as exc:
            load_generative_spec(io.StringIO(text))
        assert exc.value.field == "generative"

    def test_missing_spec_table(self):
        """A file without [generative] is rejected."""
        with pytest.raises(MomentFileError, match="missing"):
            load_generative_spec(io.StringIO("x = 1\n"))

    def test_returns_roundtrip(self, rng):
        """Simulated draws read back exactly, with their labels."""
        samples = simulate_panel(random_spec(rng, 3, 1), 4, seed=2)
        text = serialize_returns(samples, seed=2)
        assert "seed = 2" in text
        loaded = parse_returns(io.StringIO(text))
        assert [s.date_label for s in loaded] == ["t0", "t1", "t2", "t3"]
        for a, b in zip(samples, loaded):
            assert np.array_equal(a.x, b.x)

    def test_returns_rejects_moment_file(self):
        """parse_returns checks the format tag."""
        with pytest.raises(MomentFileError) as exc:
            parse_returns(io.StringIO(HEADER))
        assert exc.value.field == "format"

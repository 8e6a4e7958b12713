"""
Tests for Configuration System.

This test suite covers:
1. Schema validation (type mismatch, constraint violation)
2. Parsing raw strings from the environment and flags
3. TOML generation from schema (with comments)
4. TOML parsing, exact floats and error cases
5. Layered loading: defaults, file, environment, overrides
"""

import tempfile
from pathlib import Path

import pytest
import tomlkit

from linfac.config import SCHEMA, ConfigError, RunConfig, default_config_toml, load_config
from linfac.config.schema import (
    ConfigField,
    SchemaError,
    ValidationError,
    generate_default_config,
    validate_config,
)
from linfac.config.toml_handler import (
    TOMLError,
    dumps_toml,
    exact_float,
    generate_toml_from_schema,
    loads_toml,
    read_toml,
    write_toml,
)
from linfac.core.linalg import Tolerance


class TestSchemaValidation:
    """Test schema field validation."""

    def test_field_creation_basic_types(self):
        """ConfigField should accept basic types."""
        assert ConfigField(int, 42, "An integer").default == 42
        assert ConfigField(str, "hello", "A string").type_ is str
        assert ConfigField(float, 3.14, "A float").default == 3.14
        assert ConfigField(bool, True, "A boolean").default is True

    def test_field_unsupported_type(self):
        """Only int, float, str and bool fields exist."""
        with pytest.raises(SchemaError, match="Unsupported field type"):
            ConfigField(list, [], "A list")

    def test_field_default_type_mismatch(self):
        """ConfigField should reject a default that doesn't match its type."""
        with pytest.raises(SchemaError, match="is invalid"):
            ConfigField(int, "not an int", "Bad default")

    def test_field_min_max_constraints(self):
        """Numbers are checked against inclusive bounds."""
        field = ConfigField(int, 50, "Number with range", min=0, max=100)
        field.validate(0)
        field.validate(100)

        with pytest.raises(ValidationError, match="at least 0"):
            field.validate(-1)
        with pytest.raises(ValidationError, match="greater than maximum"):
            field.validate(101)

    def test_field_exclusive_min(self):
        """exclusive_min rejects the bound itself."""
        field = ConfigField(float, 1e-8, "Tolerance", min=0.0, exclusive_min=True)
        field.validate(1e-300)
        with pytest.raises(ValidationError, match="greater than 0.0"):
            field.validate(0.0)

    def test_min_max_only_for_numbers(self):
        """String fields cannot carry bounds."""
        with pytest.raises(SchemaError, match="only supported for int and float"):
            ConfigField(str, "abc", "Bounded string", min=1)

    def test_field_choices_constraint(self):
        """Values outside choices are rejected, defaults included."""
        field = ConfigField(str, "json", "Format", choices=["json", "text"])
        field.validate("text")
        with pytest.raises(ValidationError, match="not in allowed choices"):
            field.validate("yaml")
        with pytest.raises(SchemaError, match="is invalid"):
            ConfigField(str, "yaml", "Bad choice", choices=["json", "text"])

    def test_bool_is_not_int(self):
        """True is not accepted for an int field."""
        with pytest.raises(ValidationError, match="Expected type int"):
            ConfigField(int, 1, "Count").validate(True)

    def test_int_widened_for_float(self):
        """validate_config widens ints to float for float fields."""
        result = validate_config({"abs_residual_tol": 1}, SCHEMA)
        assert result["abs_residual_tol"] == 1.0
        assert isinstance(result["abs_residual_tol"], float)

    def test_unknown_field(self):
        """validate_config rejects names outside the schema."""
        with pytest.raises(ValidationError, match="Unknown configuration field: colour"):
            validate_config({"colour": "red"}, SCHEMA)

    def test_field_name_in_message(self):
        """Invalid values are reported with their field name."""
        with pytest.raises(ValidationError, match="Field 'workers'"):
            validate_config({"workers": 0}, SCHEMA)


class TestParse:
    """Test parsing of raw strings."""

    @pytest.mark.parametrize("raw,expected", [("1", True), ("yes", True), ("OFF", False), (" false ", False)])
    def test_bool_words(self, raw, expected):
        """Boolean words are case-insensitive."""
        assert ConfigField(bool, False).parse(raw) is expected

    def test_numbers(self):
        """Numbers are parsed and validated."""
        assert SCHEMA["rel_rank_tol"].parse("1e-12") == 1e-12
        with pytest.raises(ValidationError, match="Cannot parse"):
            SCHEMA["workers"].parse("many")
        with pytest.raises(ValidationError):
            SCHEMA["rel_rank_tol"].parse("0.5")


class TestTOMLHandler:
    """Test TOML file I/O operations."""

    def test_toml_read_write_roundtrip(self):
        """TOML read/write should preserve data."""
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "nested" / "test.toml"
            data = {"linfac": {"workers": 4, "output_format": "text", "strict": True}}
            write_toml(config_file, data)
            assert read_toml(config_file) == data

    def test_exact_float(self):
        """Floats written with exact_float read back bit-identically."""
        values = [0.1, 1 / 3, 2.0**-52, -123456.789e-30]
        doc = tomlkit.document()
        for i, value in enumerate(values):
            doc.add(f"v{i}", exact_float(value))
        loaded = loads_toml(dumps_toml(doc))
        assert [loaded[f"v{i}"] for i in range(len(values))] == values

    def test_toml_generate_from_schema(self):
        """Generated TOML carries descriptions and constraints as comments."""
        schema = {
            "threshold": ConfigField(float, 0.5, "Detection threshold", min=0.0, max=1.0),
            "mode": ConfigField(str, "fast", "Run mode", choices=["fast", "slow"], env="MODE"),
        }
        toml_str = generate_toml_from_schema("test", schema, {"threshold": 0.25})

        assert "# Detection threshold" in toml_str
        assert ">= 0.0; <= 1.0" in toml_str
        assert "env MODE" in toml_str
        assert loads_toml(toml_str) == {"test": {"threshold": 0.25, "mode": "fast"}}

    def test_missing_file(self):
        """A missing file raises TOMLError."""
        with pytest.raises(TOMLError, match="not found"):
            read_toml(Path("/nonexistent/linfac.toml"))

    def test_invalid_toml(self):
        """Malformed TOML raises TOMLError naming the source."""
        with pytest.raises(TOMLError, match="moments.toml"):
            loads_toml("x = [1, 2", "moments.toml")


class TestLoadConfig:
    """Test layered configuration loading."""

    def test_defaults(self):
        """Without sources the schema defaults apply."""
        cfg = load_config(env={})
        assert cfg == RunConfig()
        assert cfg.tolerance() == Tolerance(1e-10, 1e-8)
        assert cfg.as_dict() == generate_default_config(SCHEMA)

    def test_layering(self):
        """File < environment < overrides."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "linfac.toml"
            path.write_text("[linfac]\nrel_rank_tol = 1e-9\nworkers = 2\nseed = 5\n")
            cfg = load_config(
                path,
                env={"LINFAC_TOL_RANK": "1e-11", "LINFAC_TOL_RESIDUAL": ""},
                overrides={"seed": 9, "workers": None},
            )
        assert cfg.rel_rank_tol == 1e-11
        assert cfg.abs_residual_tol == 1e-8
        assert cfg.workers == 2
        assert cfg.seed == 9

    def test_file_without_section(self):
        """Other tables in the file are ignored."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "other.toml"
            path.write_text("[tool]\nx = 1\n")
            assert load_config(path, env={}) == RunConfig()

    @pytest.mark.parametrize(
        "text,match",
        [
            ("[linfac]\nworkers = 0\n", "workers"),
            ("[linfac]\ncolour = 'red'\n", "Unknown configuration field"),
            ("linfac = 3\n", "must be a table"),
            ("[linfac\n", "Failed to parse"),
        ],
    )
    def test_invalid_file(self, text, match):
        """Invalid files raise ConfigError."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "linfac.toml"
            path.write_text(text)
            with pytest.raises(ConfigError, match=match):
                load_config(path, env={})

    def test_invalid_environment(self):
        """Unparseable environment values name the variable."""
        with pytest.raises(ConfigError, match="LINFAC_TOL_RESIDUAL"):
            load_config(env={"LINFAC_TOL_RESIDUAL": "tiny"})

    def test_invalid_override(self):
        """Overrides are validated like every other source."""
        with pytest.raises(ConfigError, match="output_format"):
            load_config(env={}, overrides={"output_format": "yaml"})

    def test_default_config_toml(self):
        """The rendered default configuration parses back to the defaults."""
        text = default_config_toml()
        assert "LINFAC_TOL_RANK" in text
        assert loads_toml(text)["linfac"] == generate_default_config(SCHEMA)

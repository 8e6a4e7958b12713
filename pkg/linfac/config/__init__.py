"""
Linfac Run Configuration.

Settings are layered, later sources overriding earlier ones:
1. Schema defaults
2. The [linfac] table of an optional TOML file
3. Environment variables (LINFAC_TOL_RANK, LINFAC_TOL_RESIDUAL)
4. Explicit overrides, normally command-line flags

Example usage:
    from linfac.config import load_config

    cfg = load_config(Path("linfac.toml"), overrides={"strict": True})
    tol = cfg.tolerance()
"""

import logging
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from linfac.config.schema import (
    ConfigField,
    SchemaError,
    ValidationError,
    generate_default_config,
    validate_config,
)
from linfac.config.toml_handler import TOMLError, generate_toml_from_schema, read_toml
from linfac.core.linalg import Tolerance

logger = logging.getLogger(__name__)

SECTION = "linfac"

SCHEMA: dict[str, ConfigField] = {
    "rel_rank_tol": ConfigField(
        float,
        1e-10,
        "Singular values below rel_rank_tol * sigma_max count as zero",
        min=0.0,
        max=0.1,
        exclusive_min=True,
        env="LINFAC_TOL_RANK",
    ),
    "abs_residual_tol": ConfigField(
        float,
        1e-8,
        "Threshold for relative equality and membership residuals",
        min=0.0,
        exclusive_min=True,
        env="LINFAC_TOL_RESIDUAL",
    ),
    "output_format": ConfigField(str, "json", "Report format", choices=["json", "text"]),
    "strict": ConfigField(bool, False, "Abort on the first per-date data error"),
    "workers": ConfigField(int, 1, "Threads used to process dates", min=1),
    "seed": ConfigField(int, 0, "Seed echoed into reports and used by simulations", min=0),
}


class ConfigError(Exception):
    """Raised when configuration sources cannot be combined into a valid config."""

    pass


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings."""

    rel_rank_tol: float = 1e-10
    abs_residual_tol: float = 1e-8
    output_format: str = "json"
    strict: bool = False
    workers: int = 1
    seed: int = 0

    def tolerance(self) -> Tolerance:
        return Tolerance(self.rel_rank_tol, self.abs_residual_tol)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def _from_env(env: Mapping[str, str]) -> dict[str, Any]:
    values = {}
    for name, field in SCHEMA.items():
        if field.env and env.get(field.env, "").strip():
            try:
                values[name] = field.parse(env[field.env])
            except ValidationError as e:
                raise ConfigError(f"Environment variable {field.env}: {e}") from e
    return values


def load_config(
    path: Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """
    Build a RunConfig from defaults, a TOML file, the environment and overrides.

    Args:
        path: Optional TOML file with a [linfac] table
        env: Environment mapping (defaults to os.environ)
        overrides: Final values; None entries are ignored

    Raises:
        ConfigError: If any source is unreadable or holds an invalid value
    """
    values = generate_default_config(SCHEMA)
    try:
        if path is not None:
            table = read_toml(path).get(SECTION, {})
            if not isinstance(table, dict):
                raise ConfigError(f"[{SECTION}] in {path} must be a table")
            values.update(validate_config(table, SCHEMA))
            logger.debug("Loaded config from %s", path)
        values.update(_from_env(os.environ if env is None else env))
        if overrides:
            values.update(validate_config({k: v for k, v in overrides.items() if v is not None}, SCHEMA))
    except (TOMLError, SchemaError) as e:
        raise ConfigError(str(e)) from e
    return RunConfig(**values)


def default_config_toml() -> str:
    """The default configuration as a commented TOML document."""
    return generate_toml_from_schema(SECTION, SCHEMA, {})


__all__ = ["SCHEMA", "ConfigError", "RunConfig", "default_config_toml", "load_config"]

"""
TOML File I/O Handler.

Reading goes through tomllib (tomli before Python 3.11), writing through
tomlkit, which keeps comments and lets floats carry an exact textual form.
"""

import sys
from pathlib import Path
from typing import Any, TextIO

import tomlkit
from tomlkit.items import Float, Trivia

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class TOMLError(Exception):
    """Base exception for TOML-related errors."""

    pass


def read_toml(file_path: Path) -> dict[str, Any]:
    """
    Read and parse a TOML file.

    Raises:
        TOMLError: If the file cannot be read or parsed
    """
    try:
        with open(file_path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise TOMLError(f"TOML file not found: {file_path}") from e
    except tomllib.TOMLDecodeError as e:
        raise TOMLError(f"Failed to parse TOML file {file_path}: {e}") from e
    except OSError as e:
        raise TOMLError(f"Failed to read TOML file {file_path}: {e}") from e


def loads_toml(text: str, source: str = "<string>") -> dict[str, Any]:
    """
    Parse TOML text.

    Raises:
        TOMLError: If the text is not valid TOML; the message carries line and column
    """
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise TOMLError(f"Failed to parse TOML from {source}: {e}") from e


def read_toml_stream(stream: TextIO, source: str = "<stream>") -> dict[str, Any]:
    """Parse TOML from an open text stream."""
    return loads_toml(stream.read(), source)


def exact_float(value: float) -> Float:
    """A TOML float rendered with 17 significant digits so it reads back bit-identically."""
    value = float(value)
    return Float(value, Trivia(), f"{value:.16e}")


def dumps_toml(data: Any) -> str:
    """Render a mapping or tomlkit document as TOML text."""
    return tomlkit.dumps(data)


def write_toml(file_path: Path, data: Any) -> None:
    """
    Write data to a TOML file using tomlkit.

    Raises:
        TOMLError: If the file cannot be written
    """
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as f:
            f.write(dumps_toml(data))
    except OSError as e:
        raise TOMLError(f"Failed to write TOML file {file_path}: {e}") from e


def generate_toml_from_schema(section: str, schema: dict[str, Any], values: dict[str, Any]) -> str:
    """
    Render a config section with each field's description and constraints as comments.

    Args:
        section: Table name, e.g. "linfac"
        schema: Field name to ConfigField
        values: Field name to value; missing fields use their defaults
    """
    doc = tomlkit.document()
    doc.add(tomlkit.comment(f"{section} run configuration"))
    doc.add(tomlkit.nl())
    table = tomlkit.table()
    for name, field in schema.items():
        if field.description:
            table.add(tomlkit.comment(field.description))
        constraints = []
        if field.min is not None:
            constraints.append(f"{'>' if field.exclusive_min else '>='} {field.min}")
        if field.max is not None:
            constraints.append(f"<= {field.max}")
        if field.choices is not None:
            constraints.append(f"one of {field.choices}")
        if field.env:
            constraints.append(f"env {field.env}")
        if constraints:
            table.add(tomlkit.comment("; ".join(constraints)))
        table.add(name, values.get(name, field.default))
    doc.add(section, table)
    return tomlkit.dumps(doc)

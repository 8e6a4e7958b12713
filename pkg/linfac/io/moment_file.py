"""
Moment File Format.

A moment file is a TOML document holding one record per date:

    format = "linfac-moments"
    version = 1

    [[date]]
    label = "2024-01"
    n = 3
    m = 2
    mu = [...]                   # n reals
    sigma = [[...], ...]         # n x n
    phi = [[...], ...]           # n x m
    w = [[...], ...]             # n x m, or instead:

    [date.recipe]
    kind = "ols" | "gls" | "general_form" | "gls_type_generative"
    r = [[...]]                  # general_form: m x m
    s = [[...]]                  # general_form: n x n
    sigma_eps = [[...]]          # gls: n x n

    [date.generative]            # replaces mu and sigma
    mu_g = [...]                 # m reals
    sigma_g = [[...]]            # m x m
    sigma_eta = [[...]]          # n x n

Exactly one of w and recipe must be present. n may differ between dates;
m may not. Floats are written with 17 significant digits so that parsing a
serialized file gives back the same bits.

A generative spec file holds a single [generative] table with phi, mu_g,
sigma_g and sigma_eta. A returns file (format "linfac-returns") holds
simulated draws as [[date]] records with label and x.
"""

import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import tomlkit

from linfac.config.toml_handler import TOMLError, dumps_toml, exact_float, loads_toml
from linfac.core.model import (
    Characteristics,
    CrossSectionMoments,
    FactorWeights,
    ModelError,
    PanelEntry,
    PanelSequence,
    ReturnSample,
)
from linfac.factors.builders import BuilderError, RecipeKind, WeightRecipe
from linfac.factors.generative import GenerativeSpec, GenerativeSpecError, implied_moments

logger = logging.getLogger(__name__)

MOMENTS_FORMAT = "linfac-moments"
RETURNS_FORMAT = "linfac-returns"
FORMAT_VERSION = 1


class MomentFileError(Exception):
    """
    Raised when a moment or spec file is malformed.

    Attributes:
        record: Zero-based index of the offending [[date]] record, if any
        field: Name of the offending field, if any
    """

    def __init__(self, message: str, record: int | None = None, field: str | None = None):
        self.record = record
        self.field = field
        where = []
        if record is not None:
            where.append(f"record {record}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _vector(table: dict, name: str, length: int, record: int | None) -> np.ndarray:
    value = table.get(name)
    if not isinstance(value, list) or not all(_is_number(v) for v in value):
        raise MomentFileError("expected an array of numbers", record, name)
    if len(value) != length:
        raise MomentFileError(f"has {len(value)} entries, expected {length}", record, name)
    arr = np.array(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise MomentFileError("contains non-finite numbers", record, name)
    return arr


def _matrix(table: dict, name: str, rows: int, cols: int, record: int | None) -> np.ndarray:
    value = table.get(name)
    if not isinstance(value, list):
        raise MomentFileError("expected an array of rows", record, name)
    if len(value) != rows:
        raise MomentFileError(f"has {len(value)} rows, expected {rows}", record, name)
    for i, row in enumerate(value):
        if not isinstance(row, list) or not all(_is_number(v) for v in row):
            raise MomentFileError(f"row {i} is not an array of numbers", record, name)
        if len(row) != cols:
            raise MomentFileError(f"row {i} has {len(row)} entries, expected {cols}", record, name)
    arr = np.array(value, dtype=float).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise MomentFileError("contains non-finite numbers", record, name)
    return arr


def _dimension(table: dict, name: str, record: int | None) -> int:
    value = table.get(name)
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise MomentFileError("expected a non-negative integer", record, name)
    return value


def _spec_from_table(table: dict, phi: Characteristics, record: int | None) -> GenerativeSpec:
    n, m = phi.n, phi.m
    try:
        return GenerativeSpec(
            phi,
            _vector(table, "mu_g", m, record),
            _matrix(table, "sigma_g", m, m, record),
            _matrix(table, "sigma_eta", n, n, record),
        )
    except GenerativeSpecError as e:
        raise MomentFileError(str(e), record, "generative") from e


def _recipe_from_table(table: Any, n: int, m: int, record: int) -> WeightRecipe:
    if not isinstance(table, dict):
        raise MomentFileError("expected a table", record, "recipe")
    kind = table.get("kind")
    try:
        kind = RecipeKind(kind)
    except ValueError as e:
        valid = ", ".join(k.value for k in RecipeKind)
        raise MomentFileError(f"unknown kind {kind!r}; valid: {valid}", record, "recipe.kind") from e
    extra = set(table) - {"kind", "r", "s", "sigma_eps"}
    if extra:
        raise MomentFileError(f"unknown keys {sorted(extra)}", record, "recipe")
    r = _matrix(table, "r", m, m, record) if "r" in table else None
    s = _matrix(table, "s", n, n, record) if "s" in table else None
    sigma_eps = _matrix(table, "sigma_eps", n, n, record) if "sigma_eps" in table else None
    try:
        return WeightRecipe(kind, r=r, s=s, sigma_eps=sigma_eps)
    except BuilderError as e:
        raise MomentFileError(str(e), record, "recipe") from e


def _entry_from_record(rec: Any, index: int) -> PanelEntry:
    if not isinstance(rec, dict):
        raise MomentFileError("expected a table", index)
    known = {"label", "n", "m", "mu", "sigma", "phi", "w", "recipe", "generative"}
    extra = set(rec) - known
    if extra:
        raise MomentFileError(f"unknown keys {sorted(extra)}", index)
    label = rec.get("label", f"date-{index}")
    if not isinstance(label, str):
        raise MomentFileError("expected a string", index, "label")
    n = _dimension(rec, "n", index)
    m = _dimension(rec, "m", index)
    phi = Characteristics(_matrix(rec, "phi", n, m, index))

    if ("w" in rec) == ("recipe" in rec):
        raise MomentFileError("exactly one of 'w' and 'recipe' must be given", index)
    weights = FactorWeights(_matrix(rec, "w", n, m, index)) if "w" in rec else None
    recipe = _recipe_from_table(rec["recipe"], n, m, index) if "recipe" in rec else None

    spec = None
    if "generative" in rec:
        if "mu" in rec or "sigma" in rec:
            raise MomentFileError("'generative' replaces 'mu' and 'sigma'", index)
        if not isinstance(rec["generative"], dict):
            raise MomentFileError("expected a table", index, "generative")
        spec = _spec_from_table(rec["generative"], phi, index)
        moments = implied_moments(spec, label)
    else:
        moments = CrossSectionMoments(
            _vector(rec, "mu", n, index), _matrix(rec, "sigma", n, n, index), label
        )
    if recipe is not None and recipe.kind is RecipeKind.GLS_TYPE_GENERATIVE and spec is None:
        raise MomentFileError("gls_type_generative recipe needs a [date.generative] table", index, "recipe")
    return PanelEntry(moments, phi, weights, recipe, spec)


def _check_header(doc: dict, expected: str) -> None:
    fmt = doc.get("format", expected)
    if fmt != expected:
        raise MomentFileError(f"format is {fmt!r}, expected {expected!r}", field="format")
    version = doc.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise MomentFileError(f"unsupported version {version!r}", field="version")


def _load_document(source: Path | str | TextIO) -> dict:
    try:
        if isinstance(source, (str, Path)):
            if str(source) == "-":
                return loads_toml(sys.stdin.read(), "<stdin>")
            path = Path(source)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as e:
                raise MomentFileError(f"cannot read {path}: {e}") from e
            return loads_toml(text, str(path))
        return loads_toml(source.read(), getattr(source, "name", "<stream>"))
    except TOMLError as e:
        raise MomentFileError(str(e)) from e


def parse_moment_text(text: str) -> PanelSequence:
    """Parse a moment file given as text."""
    try:
        return _panel_from_document(loads_toml(text))
    except TOMLError as e:
        raise MomentFileError(str(e)) from e


def parse_moment_file(source: Path | str | TextIO) -> PanelSequence:
    """
    Parse a moment file into a PanelSequence.

    Args:
        source: Path, "-" for standard input, or an open text stream

    Raises:
        MomentFileError: On malformed syntax (with line and column), bad
            shapes or non-finite numbers (with record index and field)
    """
    return _panel_from_document(_load_document(source))


def _panel_from_document(doc: dict) -> PanelSequence:
    _check_header(doc, MOMENTS_FORMAT)
    records = doc.get("date", [])
    if not isinstance(records, list):
        raise MomentFileError("'date' must be an array of tables", field="date")
    entries = [_entry_from_record(rec, i) for i, rec in enumerate(records)]
    try:
        panel = PanelSequence(entries)
    except ModelError as e:
        raise MomentFileError(str(e), field="m") from e
    logger.debug("Parsed %d date record(s)", len(panel))
    return panel


def _float_array(values: Sequence[float]) -> tomlkit.items.Array:
    arr = tomlkit.array()
    for v in values:
        arr.append(exact_float(v))
    return arr


def _matrix_array(matrix: np.ndarray) -> tomlkit.items.Array:
    rows = tomlkit.array()
    for row in np.atleast_2d(matrix):
        rows.append(_float_array(row))
    if matrix.shape[0] > 1:
        rows.multiline(True)
    return rows


def _spec_table(spec: GenerativeSpec, with_phi: bool) -> tomlkit.items.Table:
    table = tomlkit.table()
    if with_phi:
        table.add("phi", _matrix_array(spec.phi.phi))
    table.add("mu_g", _float_array(spec.mu_g))
    table.add("sigma_g", _matrix_array(spec.sigma_g))
    table.add("sigma_eta", _matrix_array(spec.sigma_eta))
    return table


def _record_table(entry: PanelEntry) -> tomlkit.items.Table:
    table = tomlkit.table()
    table.add("label", entry.date_label)
    table.add("n", entry.phi.n)
    table.add("m", entry.phi.m)
    if entry.spec is None:
        table.add("mu", _float_array(entry.moments.mu))
        table.add("sigma", _matrix_array(entry.moments.sigma))
    table.add("phi", _matrix_array(entry.phi.phi))
    if entry.weights is not None:
        table.add("w", _matrix_array(entry.weights.w))
    if entry.recipe is not None:
        recipe = tomlkit.table()
        recipe.add("kind", entry.recipe.kind.value)
        for name in ("r", "s", "sigma_eps"):
            value = getattr(entry.recipe, name)
            if value is not None:
                recipe.add(name, _matrix_array(np.asarray(value, dtype=float)))
        table.add("recipe", recipe)
    if entry.spec is not None:
        table.add("generative", _spec_table(entry.spec, with_phi=False))
    return table


def serialize_panel(panel: PanelSequence | Sequence[PanelEntry]) -> str:
    """
    Render a panel as moment-file text.

    Field order and number formatting are normalized, so serializing a
    parsed file reproduces it exactly once it has been serialized once.
    """
    doc = tomlkit.document()
    doc.add("format", MOMENTS_FORMAT)
    doc.add("version", FORMAT_VERSION)
    dates = tomlkit.aot()
    for entry in panel:
        dates.append(_record_table(entry))
    if len(dates):
        doc.add("date", dates)
    return dumps_toml(doc)


def load_generative_spec(source: Path | str | TextIO) -> GenerativeSpec:
    """
    Read a generative spec file ([generative] table with phi, mu_g, sigma_g, sigma_eta).

    Raises:
        MomentFileError: If the file is malformed or the spec is invalid
    """
    doc = _load_document(source)
    table = doc.get("generative")
    if not isinstance(table, dict):
        raise MomentFileError("missing [generative] table", field="generative")
    phi_rows = table.get("phi")
    if not isinstance(phi_rows, list) or not phi_rows or not isinstance(phi_rows[0], list):
        raise MomentFileError("expected a non-empty array of rows", field="phi")
    n, m = len(phi_rows), len(phi_rows[0])
    phi = Characteristics(_matrix(table, "phi", n, m, None))
    return _spec_from_table(table, phi, None)


def dump_generative_spec(spec: GenerativeSpec) -> str:
    """Render a generative spec file."""
    doc = tomlkit.document()
    doc.add("generative", _spec_table(spec, with_phi=True))
    return dumps_toml(doc)


def serialize_returns(samples: Sequence[ReturnSample], seed: int) -> str:
    """Render simulated draws as a returns file."""
    doc = tomlkit.document()
    doc.add("format", RETURNS_FORMAT)
    doc.add("version", FORMAT_VERSION)
    doc.add("seed", seed)
    dates = tomlkit.aot()
    for sample in samples:
        record = tomlkit.table()
        record.add("label", sample.date_label)
        record.add("x", _float_array(sample.x))
        dates.append(record)
    if len(dates):
        doc.add("date", dates)
    return dumps_toml(doc)


def parse_returns(source: Path | str | TextIO) -> list[ReturnSample]:
    """
    Read a returns file back into ReturnSamples.

    Raises:
        MomentFileError: If the file is malformed
    """
    doc = _load_document(source)
    _check_header(doc, RETURNS_FORMAT)
    samples = []
    for i, rec in enumerate(doc.get("date", [])):
        x = rec.get("x") if isinstance(rec, dict) else None
        if not isinstance(x, list):
            raise MomentFileError("expected an array of numbers", i, "x")
        samples.append(ReturnSample(_vector(rec, "x", len(x), i), rec.get("label", f"date-{i}")))
    return samples
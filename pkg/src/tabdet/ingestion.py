"""Load tables from CSV, infer schemas, pool rows, and corrupt for tests.

A table is immutable after construction.  Cells are either finite floats
(numerical columns) or plain strings (categorical columns; the empty string
is a legal category).  An empty cell in a numerical column is a load error:
encoders downstream are total functions and missing-value handling is out
of scope.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

REAL_ORIGIN = "real"

NUMERICAL = "numerical"
CATEGORICAL = "categorical"

_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")

TOY_MODES = ("marginal_shuffle", "digit_bias")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in (NUMERICAL, CATEGORICAL):
            raise ValueError(f"unknown column kind {self.kind!r}")


@dataclass(frozen=True)
class TableDataset:
    """A named table with typed columns, tagged real or synthetic-by-generator."""

    name: str
    schema: tuple[ColumnSchema, ...]
    rows: tuple[tuple, ...]
    origin: str = REAL_ORIGIN

    def __post_init__(self):
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise ValueError(f"table {self.name!r}: duplicate column names")
        if not self.rows:
            raise ValueError(f"table {self.name!r}: no data rows")
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(
                    f"table {self.name!r}: row {i} has {len(row)} cells, expected {width}"
                )

    @property
    def is_real(self) -> bool:
        return self.origin == REAL_ORIGIN

    def column(self, name: str) -> list:
        idx = [c.name for c in self.schema].index(name)
        return [row[idx] for row in self.rows]


@dataclass(frozen=True, slots=True)
class RowRecord:
    """One pooled training example: cell values plus the two extra labels."""

    cells: tuple
    dataset_name: str
    origin: str

    @property
    def binary_label(self) -> int:
        return 0 if self.origin == REAL_ORIGIN else 1


def parse_number(text: str) -> float | None:
    """Parse an integer/decimal literal; NaN, Inf and junk return None."""
    if not _NUMBER_RE.match(text):
        return None
    value = float(text)
    if not math.isfinite(value):
        return None
    return value


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        raw_rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {i}: expected {len(header)} cells, got {len(row)}"
                )
            raw_rows.append(row)
    if not raw_rows:
        raise ParseError(f"{path}: no data rows")
    return header, raw_rows


def _infer_kinds(header: list[str], raw_rows: list[list[str]]) -> list[str]:
    kinds = []
    for j, _ in enumerate(header):
        non_empty = [row[j] for row in raw_rows if row[j] != ""]
        numeric = bool(non_empty) and all(parse_number(c) is not None for c in non_empty)
        kinds.append(NUMERICAL if numeric else CATEGORICAL)
    return kinds


def load_table(
    path,
    schema: list[ColumnSchema] | None = None,
    origin: str = REAL_ORIGIN,
    name: str | None = None,
) -> TableDataset:
    """Load a header-ed CSV; infer column kinds unless a schema is given.

    Inference rule: a column is numerical iff it has at least one non-empty
    cell and every non-empty cell parses as a finite real.
    """
    path = Path(path)
    header, raw_rows = _read_csv(path)
    if schema is not None:
        by_name = {c.name: c for c in schema}
        if set(by_name) != set(header) or len(schema) != len(header):
            raise ParseError(
                f"{path}: schema columns {sorted(by_name)} do not match header {header}"
            )
        columns = [by_name[h] for h in header]
    else:
        kinds = _infer_kinds(header, raw_rows)
        columns = [ColumnSchema(h, k) for h, k in zip(header, kinds)]

    rows = []
    for i, raw in enumerate(raw_rows, start=1):
        cells = []
        for col, cell in zip(columns, raw):
            if col.kind == NUMERICAL:
                value = parse_number(cell)
                if value is None:
                    raise ParseError(
                        f"{path}: row {i}: column {col.name!r}: "
                        f"cannot parse {cell!r} as a finite number"
                    )
                cells.append(value)
            else:
                cells.append(cell)
        rows.append(tuple(cells))

    return TableDataset(
        name=name if name is not None else path.stem,
        schema=tuple(columns),
        rows=tuple(rows),
        origin=origin,
    )


def pool_rows(tables: list[TableDataset]) -> list[RowRecord]:
    """Mix all table rows into one list carrying dataset-name and origin labels."""
    if not tables:
        raise ValueError("pool_rows needs at least one table")
    records = []
    for table in tables:
        for row in table.rows:
            records.append(RowRecord(row, table.name, table.origin))
    return records


def schema_index(tables: list[TableDataset]) -> dict[str, tuple[ColumnSchema, ...]]:
    """Map dataset name to its schema; real/synthetic copies must agree."""
    out: dict[str, tuple[ColumnSchema, ...]] = {}
    for table in tables:
        if table.name in out and out[table.name] != table.schema:
            raise ValueError(f"conflicting schemas for dataset {table.name!r}")
        out[table.name] = table.schema
    return out


def toy_corrupt(table: TableDataset, mode: str, seed: int) -> TableDataset:
    """Desk-scale stand-in generator: corrupt a real table into a synthetic one.

    ``marginal_shuffle`` permutes each column independently (kills
    inter-column dependence, keeps every marginal exactly).  ``digit_bias``
    rounds every numerical cell to one decimal place (injects a formatting
    artifact), leaving categoricals untouched.
    """
    if mode not in TOY_MODES:
        raise ValueError(f"unknown toy mode {mode!r}; expected one of {TOY_MODES}")
    if not table.is_real:
        raise ValueError(f"toy_corrupt expects a real table, got origin {table.origin!r}")

    n = len(table.rows)
    columns = list(zip(*table.rows))
    if mode == "marginal_shuffle":
        rng = np.random.default_rng(seed)
        shuffled = []
        for col in columns:
            perm = rng.permutation(n)
            shuffled.append(tuple(col[p] for p in perm))
        new_rows = tuple(zip(*shuffled))
    else:
        new_rows = tuple(
            tuple(
                round(cell, 1) if col.kind == NUMERICAL else cell
                for col, cell in zip(table.schema, row)
            )
            for row in table.rows
        )

    return TableDataset(
        name=table.name,
        schema=table.schema,
        rows=new_rows,
        origin=f"toy-{mode}",
    )

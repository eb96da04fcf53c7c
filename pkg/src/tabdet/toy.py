"""Desk-scale toy corpus: three small tables with strong, distinct
inter-column dependence, plus corrupted synthetic versions.

Each table hides its signal differently (matched ranks, mirrored ranks, a
folded nonmonotone curve), so a detector that memorizes one table's
pattern gains little on a held-out one -- which is what the cross-table
degradation checks rely on.  Numeric draws keep full float precision so
the digit-rounding corruption is visible to character models.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .ingestion import (
    CATEGORICAL,
    NUMERICAL,
    TOY_MODES,
    ColumnSchema,
    TableDataset,
    toy_corrupt,
)
from .text_encoding import format_cell


def _bucket(value: float, edges: list[float], names: list[str]) -> str:
    for edge, name in zip(edges, names):
        if value < edge:
            return name
    return names[-1]


def make_toy_tables(n_rows: int = 500, seed: int = 0) -> list[TableDataset]:
    """Three real tables of 3, 2 and 6 columns with per-table dependence."""
    rng = np.random.default_rng(seed)

    x = rng.uniform(0.0, 10.0, n_rows)
    y = x + rng.normal(0.0, 0.02, n_rows)
    c = [_bucket(v, [10 / 3, 20 / 3], ["lo", "mid", "hi"]) for v in x]
    alpha = TableDataset(
        name="alpha",
        schema=(
            ColumnSchema("x", NUMERICAL),
            ColumnSchema("y", NUMERICAL),
            ColumnSchema("c", CATEGORICAL),
        ),
        rows=tuple(zip(x.tolist(), y.tolist(), c)),
    )

    u = rng.uniform(100.0, 200.0, n_rows)
    v = 300.0 - u + rng.normal(0.0, 0.2, n_rows)
    beta = TableDataset(
        name="beta",
        schema=(ColumnSchema("u", NUMERICAL), ColumnSchema("v", NUMERICAL)),
        rows=tuple(zip(u.tolist(), v.tolist())),
    )

    a = rng.uniform(0.0, 1.0, n_rows)
    b = (a - 0.5) ** 2 + rng.normal(0.0, 0.0005, n_rows)
    d = np.sin(6.0 * a) + rng.normal(0.0, 0.01, n_rows)
    e = [_bucket(v, [0.25, 0.5, 0.75], ["q0", "q1", "q2", "q3"]) for v in a]
    f = rng.uniform(0.0, 1.0, n_rows)
    g = ["h" if t < 0.5 else "t" for t in rng.uniform(0.0, 1.0, n_rows)]
    gamma = TableDataset(
        name="gamma",
        schema=(
            ColumnSchema("a", NUMERICAL),
            ColumnSchema("b", NUMERICAL),
            ColumnSchema("d", NUMERICAL),
            ColumnSchema("e", CATEGORICAL),
            ColumnSchema("f", NUMERICAL),
            ColumnSchema("g", CATEGORICAL),
        ),
        rows=tuple(zip(a.tolist(), b.tolist(), d.tolist(), e, f.tolist(), g)),
    )

    return [alpha, beta, gamma]


def write_table_csv(table: TableDataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in table.schema])
        for row in table.rows:
            writer.writerow(
                [format_cell(cell, col.kind) for col, cell in zip(table.schema, row)]
            )


def make_toy_corpus(tables: list[TableDataset], modes=TOY_MODES, seed: int = 0):
    """Return (real tables, synthetic corruptions) for the given modes."""
    synthetic = []
    for offset, mode in enumerate(modes):
        for j, table in enumerate(tables):
            synthetic.append(toy_corrupt(table, mode, seed + 1000 * offset + j))
    return list(tables) + synthetic


def write_toy_corpus(
    out_dir, n_rows: int = 500, seed: int = 0, modes=TOY_MODES
) -> Path:
    """Write real + corrupted CSVs and a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = make_toy_tables(n_rows, seed)
    corpus = make_toy_corpus(tables, modes, seed)
    entries = []
    for table in corpus:
        suffix = "real" if table.is_real else table.origin
        filename = f"{table.name}_{suffix}.csv"
        write_table_csv(table, out_dir / filename)
        entries.append({"name": table.name, "path": filename, "origin": table.origin})
    manifest_path = out_dir / "manifest.yaml"
    manifest_path.write_text(
        yaml.safe_dump({"tables": entries}, sort_keys=False), encoding="utf-8"
    )
    return manifest_path

"""Per-dataset preprocessing for the table-based model.

Numerical columns get an empirical-quantile map onto [0, 1]; categorical
columns get ordinal indices in sorted category order with a reserved
unseen index.  Every dataset is fitted independently -- encoders for
dataset A are a pure function of dataset A's rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingestion import NUMERICAL, ColumnSchema, RowRecord

DEFAULT_N_QUANTILES = 1000


@dataclass(frozen=True)
class QuantileMap:
    """Empirical quantile landmarks; transform interpolates the CDF."""

    values: np.ndarray
    probs: np.ndarray

    @property
    def degenerate(self) -> bool:
        return len(self.values) == 1

    def transform(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.degenerate:
            return np.full_like(x, 0.5)
        return np.clip(np.interp(x, self.values, self.probs), 0.0, 1.0)


def fit_quantile(column, n_quantiles: int = DEFAULT_N_QUANTILES) -> QuantileMap:
    """Landmark the empirical quantiles at probabilities i/(n_quantiles-1).

    n_quantiles is clamped to the column length; a constant column yields a
    degenerate map sending everything to 0.5.
    """
    col = np.asarray(column, dtype=np.float64)
    if col.size == 0:
        raise ValueError("cannot fit a quantile map on an empty column")
    if not np.isfinite(col).all():
        raise ValueError("quantile fit requires finite values")
    if col.min() == col.max():
        return QuantileMap(values=np.array([col[0]]), probs=np.array([0.5]))
    nq = int(min(max(n_quantiles, 2), col.size))
    probs = np.linspace(0.0, 1.0, nq)
    values = np.quantile(col, probs)
    # collapse duplicate landmarks (ties) onto their mean probability so the
    # interpolation grid stays strictly increasing
    uniq, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    mean_probs = np.zeros(len(uniq))
    np.add.at(mean_probs, inverse, probs)
    mean_probs /= counts
    return QuantileMap(values=uniq, probs=mean_probs)


@dataclass(frozen=True)
class OrdinalMap:
    """Categories indexed in sorted order; unseen values map to len(categories)."""

    categories: tuple[str, ...]

    @property
    def unseen_index(self) -> int:
        return len(self.categories)

    def encode(self, value: str) -> int:
        idx = self._index().get(value)
        return self.unseen_index if idx is None else idx

    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_cached_index", None)
        if cached is None:
            cached = {c: i for i, c in enumerate(self.categories)}
            object.__setattr__(self, "_cached_index", cached)
        return cached


def fit_ordinal(column) -> OrdinalMap:
    values = list(column)
    if not values:
        raise ValueError("cannot fit an ordinal map on an empty column")
    return OrdinalMap(tuple(sorted(set(values))))


@dataclass(frozen=True)
class DatasetEncoders:
    """One fitted map per column of a single dataset, in schema order."""

    dataset_name: str
    schema: tuple[ColumnSchema, ...]
    maps: tuple

    def __post_init__(self):
        if len(self.schema) != len(self.maps):
            raise ValueError(
                f"dataset {self.dataset_name!r}: {len(self.maps)} maps for "
                f"{len(self.schema)} columns"
            )


@dataclass(frozen=True)
class EncodedRow:
    """Quantile-transformed numerics plus ordinal indices for one row."""

    numeric: np.ndarray
    categorical: np.ndarray
    column_count: int
    dataset_name: str


def fit_dataset_encoders(
    rows,
    schema: tuple[ColumnSchema, ...],
    dataset_name: str,
    n_quantiles: int = DEFAULT_N_QUANTILES,
) -> DatasetEncoders:
    """Fit per-column encoders on exactly the provided rows of one dataset."""
    rows = list(rows)
    if not rows:
        raise ValueError(f"dataset {dataset_name!r}: no rows to fit encoders on")
    width = len(schema)
    for row in rows:
        if len(row) != width:
            raise ValueError(
                f"dataset {dataset_name!r}: row width {len(row)} does not match "
                f"schema width {width}"
            )
    maps = []
    for j, col in enumerate(schema):
        column = [row[j] for row in rows]
        if col.kind == NUMERICAL:
            maps.append(fit_quantile(column, n_quantiles))
        else:
            maps.append(fit_ordinal(column))
    return DatasetEncoders(dataset_name, tuple(schema), tuple(maps))


def encode_row(row: RowRecord, encoders: dict[str, DatasetEncoders]) -> EncodedRow:
    """Encode one pooled row with its dataset's fitted maps."""
    enc = encoders.get(row.dataset_name)
    if enc is None:
        raise ValueError(f"no fitted encoders for dataset {row.dataset_name!r}")
    numeric = []
    categorical = []
    for cell, col, cmap in zip(row.cells, enc.schema, enc.maps):
        if col.kind == NUMERICAL:
            numeric.append(float(cmap.transform(cell)))
        else:
            categorical.append(cmap.encode(cell))
    return EncodedRow(
        numeric=np.asarray(numeric, dtype=np.float64),
        categorical=np.asarray(categorical, dtype=np.int64),
        column_count=len(enc.schema),
        dataset_name=row.dataset_name,
    )


def encoders_to_json(encoders: dict[str, DatasetEncoders]) -> str:
    payload = {}
    for name in sorted(encoders):
        enc = encoders[name]
        cols = []
        for col, cmap in zip(enc.schema, enc.maps):
            if isinstance(cmap, QuantileMap):
                cols.append(
                    {
                        "name": col.name,
                        "kind": col.kind,
                        "values": cmap.values.tolist(),
                        "probs": cmap.probs.tolist(),
                    }
                )
            else:
                cols.append(
                    {"name": col.name, "kind": col.kind, "categories": list(cmap.categories)}
                )
        payload[name] = cols
    return json.dumps(payload, sort_keys=True)


def encoders_from_json(text: str) -> dict[str, DatasetEncoders]:
    payload = json.loads(text)
    out = {}
    for name, cols in payload.items():
        schema = []
        maps = []
        for col in cols:
            schema.append(ColumnSchema(col["name"], col["kind"]))
            if col["kind"] == NUMERICAL:
                maps.append(
                    QuantileMap(
                        values=np.asarray(col["values"], dtype=np.float64),
                        probs=np.asarray(col["probs"], dtype=np.float64),
                    )
                )
            else:
                maps.append(OrdinalMap(tuple(col["categories"])))
        out[name] = DatasetEncoders(name, tuple(schema), tuple(maps))
    return out


def save_encoders(encoders: dict[str, DatasetEncoders], path) -> None:
    Path(path).write_text(encoders_to_json(encoders), encoding="utf-8")


def load_encoders(path) -> dict[str, DatasetEncoders]:
    return encoders_from_json(Path(path).read_text(encoding="utf-8"))


def fit_encoders_for_plan(
    records: list[RowRecord],
    schemas: dict[str, tuple[ColumnSchema, ...]],
    side_indices: dict[str, np.ndarray],
    n_quantiles: int = DEFAULT_N_QUANTILES,
) -> dict[str, DatasetEncoders]:
    """Fit each dataset's encoders on its rows from the first side that has any.

    ``side_indices`` maps side name to row indices; sides are consumed in
    the order given (train first, then validation, then test), so datasets
    present in training are fitted on training rows while held-out test
    datasets are fitted on their own test rows.
    """
    out: dict[str, DatasetEncoders] = {}
    for side in side_indices.values():
        by_dataset: dict[str, list] = {}
        for i in side:
            rec = records[int(i)]
            if rec.dataset_name not in out:
                by_dataset.setdefault(rec.dataset_name, []).append(rec.cells)
        for name in sorted(by_dataset):
            out[name] = fit_dataset_encoders(
                by_dataset[name], schemas[name], name, n_quantiles
            )
    return out

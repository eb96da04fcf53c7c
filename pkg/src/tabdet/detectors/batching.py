"""Row-to-batch plumbing shared by the detectors.

Table batches pad rows from tables with different column counts up to the
widest row in the batch; absent columns are masked out of attention.
Evaluation-time linearizations use a permutation that depends only on the
row's position in the pool, never on the training seed, so scores stay
comparable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ingestion import ColumnSchema, RowRecord
from ..table_encoding import EncodedRow
from ..text_encoding import CharVocab, LinearizedRow, linearize_row, tokenize_chars

EVAL_PERM_SEED = 2_000_003


@dataclass(frozen=True)
class TableBatch:
    """Padded column tokens: numeric slots, categorical slots, masks."""

    num_vals: np.ndarray  # (B, C) float
    num_mask: np.ndarray  # (B, C) bool
    cat_ids: np.ndarray  # (B, C) int64
    cat_mask: np.ndarray  # (B, C) bool

    @property
    def col_mask(self) -> np.ndarray:
        return self.num_mask | self.cat_mask

    @property
    def token_length(self) -> int:
        # CLS plus the widest row in the batch
        return 1 + self.num_vals.shape[1]


def variable_width_batching(rows: list[EncodedRow]) -> TableBatch:
    """Pad encoded rows to the batch's max column count with masked slots."""
    if not rows:
        raise ValueError("cannot batch zero rows")
    width = max(r.column_count for r in rows)
    b = len(rows)
    num_vals = np.zeros((b, width), dtype=np.float64)
    num_mask = np.zeros((b, width), dtype=bool)
    cat_ids = np.zeros((b, width), dtype=np.int64)
    cat_mask = np.zeros((b, width), dtype=bool)
    for i, row in enumerate(rows):
        n = row.numeric.size
        c = row.categorical.size
        num_vals[i, :n] = row.numeric
        num_mask[i, :n] = True
        cat_ids[i, n : n + c] = row.categorical
        cat_mask[i, n : n + c] = True
    return TableBatch(num_vals, num_mask, cat_ids, cat_mask)


def eval_linearize(
    records: list[RowRecord],
    indices,
    schemas: dict[str, tuple[ColumnSchema, ...]],
) -> list[LinearizedRow]:
    """Linearize rows with a fixed per-row permutation keyed by pool index."""
    out = []
    for i in indices:
        rec = records[int(i)]
        rng = np.random.default_rng([EVAL_PERM_SEED, int(i)])
        out.append(linearize_row(rec, schemas[rec.dataset_name], rng=rng))
    return out


def epoch_linearize(
    records: list[RowRecord],
    indices,
    schemas: dict[str, tuple[ColumnSchema, ...]],
    rng: np.random.Generator,
) -> list[LinearizedRow]:
    """Fresh uniform permutation per row, drawn from the epoch stream."""
    out = []
    for i in indices:
        rec = records[int(i)]
        out.append(linearize_row(rec, schemas[rec.dataset_name], rng=rng))
    return out


def tokenize_batch(
    lins: list[LinearizedRow], vocab: CharVocab, max_len: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-row token ids, trimming trailing all-PAD columns."""
    ids = np.zeros((len(lins), max_len), dtype=np.int64)
    mask = np.zeros((len(lins), max_len), dtype=bool)
    for i, lin in enumerate(lins):
        ids[i], mask[i] = tokenize_chars(lin, vocab, max_len)
    longest = max(2, int(mask.sum(axis=1).max()))
    return ids[:, :longest], mask[:, :longest]


def bags_to_csr(bags) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate trigram bags into CSR arrays with sorted keys per row.

    Sorted key order makes scores an exact function of the bag, independent
    of the string order the trigrams were extracted in.
    """
    indices: list[int] = []
    values: list[float] = []
    offsets = [0]
    for bag in bags:
        for key in sorted(bag.counts):
            indices.append(key)
            values.append(float(bag.counts[key]))
        offsets.append(len(indices))
    return (
        np.asarray(indices, dtype=np.int64),
        np.asarray(values, dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
    )

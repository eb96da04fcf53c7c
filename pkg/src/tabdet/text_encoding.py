"""Row-to-text representations: linearized strings, trigram bags, char tokens.

A row becomes a comma-joined sequence of ``name:value`` fragments in a
random column order (fresh permutation per call, so training can resample
every epoch).  From there the trigram path hashes every 3-char window into
a fixed bucket space, and the char path maps characters onto a dense vocab
with PAD/UNK/CLS reserved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingestion import NUMERICAL, ColumnSchema, RowRecord
from .nn import kernels

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
N_RESERVED = 3

N_TRIGRAM_BUCKETS = 2**18


@dataclass(frozen=True)
class LinearizedRow:
    text: str
    source: RowRecord


@dataclass(frozen=True)
class TrigramBag:
    """Sparse counts over hashed 3-char windows; keys are bucket ids."""

    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def format_number(x: float) -> str:
    """Canonical cell rendering: shortest round-trip, integers without a dot."""
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_cell(cell, kind: str) -> str:
    return format_number(cell) if kind == NUMERICAL else str(cell)


def linearize_row(
    row: RowRecord,
    schema: tuple[ColumnSchema, ...],
    rng: np.random.Generator | None = None,
    permutation: list[int] | None = None,
) -> LinearizedRow:
    """Render ``name:value`` fragments joined by commas in a shuffled order.

    Pass ``rng`` to draw a fresh uniform permutation, or ``permutation`` to
    pin the order (identity order when both are omitted).
    """
    if len(row.cells) != len(schema):
        raise ValueError(
            f"row has {len(row.cells)} cells but schema has {len(schema)} columns"
        )
    n = len(schema)
    if permutation is None:
        order = rng.permutation(n) if rng is not None else range(n)
    else:
        order = permutation
    fragments = [
        f"{schema[i].name}:{format_cell(row.cells[i], schema[i].kind)}" for i in order
    ]
    return LinearizedRow(text=",".join(fragments), source=row)


def hash_trigram_ids(text: str) -> np.ndarray:
    """Bucket ids of every overlapping 3-char window, in window order."""
    if len(text) < 3:
        return np.empty(0, dtype=np.int64)
    codes = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32).astype(np.uint64)
    return kernels.hash_trigrams(codes, N_TRIGRAM_BUCKETS)


def extract_trigrams(lin: LinearizedRow) -> TrigramBag:
    ids = hash_trigram_ids(lin.text)
    uniq, counts = np.unique(ids, return_counts=True)
    return TrigramBag({int(u): int(c) for u, c in zip(uniq, counts)})


@dataclass(frozen=True)
class CharVocab:
    """Character-to-id map with reserved PAD=0, UNK=1, CLS=2 slots."""

    char_to_id: dict[str, int]

    def __len__(self) -> int:
        return N_RESERVED + len(self.char_to_id)

    def encode_char(self, ch: str) -> int:
        return self.char_to_id.get(ch, UNK_ID)

    def to_json(self) -> str:
        return json.dumps({"chars": self.char_to_id}, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CharVocab":
        data = json.loads(text)
        return cls({str(k): int(v) for k, v in data["chars"].items()})

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CharVocab":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_char_vocab(corpus) -> CharVocab:
    """Assign ids >= 3 to corpus characters in first-occurrence order."""
    char_to_id: dict[str, int] = {}
    for lin in corpus:
        for ch in lin.text:
            if ch not in char_to_id:
                char_to_id[ch] = N_RESERVED + len(char_to_id)
    if not char_to_id:
        raise ValueError("empty corpus: cannot build a character vocabulary")
    return CharVocab(char_to_id)


def tokenize_chars(
    lin: LinearizedRow, vocab: CharVocab, max_len: int
) -> tuple[np.ndarray, np.ndarray]:
    """[CLS] + char ids, truncated then PAD-filled to ``max_len``.

    Returns (ids, attention mask); the mask is True on non-PAD positions.
    """
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    ids = np.zeros(max_len, dtype=np.int64)
    ids[0] = CLS_ID
    text = lin.text[: max_len - 1]
    for i, ch in enumerate(text, start=1):
        ids[i] = vocab.encode_char(ch)
    mask = np.zeros(max_len, dtype=bool)
    mask[: 1 + len(text)] = True
    return ids, mask


def detokenize_chars(ids: np.ndarray, vocab: CharVocab) -> str:
    """Inverse of tokenize for UNK-free inputs, ignoring PAD and CLS."""
    id_to_char = {v: k for k, v in vocab.char_to_id.items()}
    out = []
    for i in ids:
        i = int(i)
        if i in (PAD_ID, CLS_ID):
            continue
        if i == UNK_ID:
            raise ValueError("cannot detokenize UNK")
        out.append(id_to_char[i])
    return "".join(out)

"""Logistic regression over hashed character trigram counts."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..ingestion import ColumnSchema, RowRecord
from ..nn import kernels
from ..nn.autograd import sigmoid_np
from ..nn.params import ParamStore, load_checkpoint, save_checkpoint
from ..text_encoding import N_TRIGRAM_BUCKETS, TrigramBag, extract_trigrams
from .batching import bags_to_csr, eval_linearize


@dataclass(frozen=True)
class TrigramLogRegConfig:
    n_buckets: int = N_TRIGRAM_BUCKETS
    l2: float = 1e-4


class TrigramLogReg:
    """Linear scorer on a fixed hashed trigram space; zero-initialized."""

    kind = "trigram_logreg"

    def __init__(self, cfg: TrigramLogRegConfig | None = None):
        self.cfg = cfg or TrigramLogRegConfig()
        self.store = ParamStore(dtype=np.float64)
        self.store.add("w", np.zeros(self.cfg.n_buckets))
        self.store.add("b", np.zeros(1))

    @property
    def weights(self) -> np.ndarray:
        return self.store["w"].data

    @property
    def bias(self) -> float:
        return float(self.store["b"].data[0])

    def logits_csr(self, indices, values, offsets) -> np.ndarray:
        z = kernels.sparse_logits(indices, values, offsets, self.weights)
        return z + self.bias

    def predict_csr(self, indices, values, offsets) -> np.ndarray:
        return sigmoid_np(self.logits_csr(indices, values, offsets))

    def score_bag(self, bag: TrigramBag) -> float:
        """Synthetic probability of one bag; exact function of the multiset."""
        indices, values, offsets = bags_to_csr([bag])
        return float(self.predict_csr(indices, values, offsets)[0])

    def predict_pool(
        self,
        records: list[RowRecord],
        indices,
        schemas: dict[str, tuple[ColumnSchema, ...]],
    ) -> np.ndarray:
        lins = eval_linearize(records, indices, schemas)
        bags = [extract_trigrams(lin) for lin in lins]
        return self.predict_csr(*bags_to_csr(bags))

    def predict_records(self, records, schemas) -> np.ndarray:
        return self.predict_pool(records, range(len(records)), schemas)

    def save(self, directory, extra: dict | None = None) -> None:
        meta = {
            "kind": self.kind,
            "config": asdict(self.cfg),
            "artifacts": {},
        }
        if extra:
            meta.update(extra)
        save_checkpoint(self.store, directory, meta)

    @classmethod
    def load(cls, directory) -> "TrigramLogReg":
        state, manifest = load_checkpoint(directory)
        if manifest["kind"] != cls.kind:
            raise ValueError(f"checkpoint kind {manifest['kind']!r} is not {cls.kind!r}")
        model = cls(TrigramLogRegConfig(**manifest["config"]))
        model.store.restore(state)
        return model


def checkpoint_digest(directory) -> str:
    blob = (Path(directory) / "checkpoint.bin").read_bytes()
    return hashlib.sha256(blob).hexdigest()


def sidecar_kind(directory) -> str:
    manifest = json.loads(
        (Path(directory) / "checkpoint.json").read_text(encoding="utf-8")
    )
    return manifest["kind"]

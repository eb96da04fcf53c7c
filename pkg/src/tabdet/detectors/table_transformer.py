"""Column-token transformer over per-dataset encoded rows.

Every numerical cell passes through one shared scalar-to-vector layer and
every categorical index through one shared embedding table, whatever the
column or dataset.  There is no positional encoding over columns, so the
CLS logit is invariant to column order.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..ingestion import ColumnSchema, RowRecord
from ..nn import autograd as ag
from ..nn.autograd import Tensor, sigmoid_np
from ..nn.encoder import EncoderConfig, encoder_forward, init_encoder
from ..nn.params import ParamStore, load_checkpoint, save_checkpoint, trunc_normal
from ..table_encoding import (
    DatasetEncoders,
    encode_row,
    load_encoders,
    save_encoders,
)
from .batching import TableBatch, variable_width_batching


@dataclass(frozen=True)
class TableTransformerConfig:
    d_model: int = 64
    layers: int = 2
    heads: int = 4
    ff: int = 128
    dropout: float = 0.1
    max_cardinality: int = 256


class TableTransformer:
    """CLS classifier over masked column tokens of variable-width rows."""

    kind = "table_transformer"

    def __init__(
        self,
        cfg: TableTransformerConfig | None = None,
        dtype=np.float32,
        seed: int = 0,
        encoders: dict[str, DatasetEncoders] | None = None,
    ):
        self.cfg = cfg or TableTransformerConfig()
        self.enc_cfg = EncoderConfig(
            d_model=self.cfg.d_model,
            layers=self.cfg.layers,
            heads=self.cfg.heads,
            ff=self.cfg.ff,
            dropout=self.cfg.dropout,
        )
        self.enc_cfg.validate()
        self.encoders = encoders or {}
        d = self.cfg.d_model
        rng = np.random.default_rng(seed)
        store = ParamStore(dtype=dtype)
        store.add("num.w", trunc_normal(rng, (1, d)))
        store.add("num.b", np.zeros(d))
        store.add("cat.emb", trunc_normal(rng, (self.cfg.max_cardinality + 1, d)))
        store.add("cls", trunc_normal(rng, (d,)))
        init_encoder(store, "enc", self.enc_cfg, rng)
        store.add("head.w", trunc_normal(rng, (d, 1)))
        store.add("head.b", np.zeros(1))
        self.store = store

    def logits(
        self,
        batch: TableBatch,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        b, c = batch.num_vals.shape
        dtype = self.store.dtype
        vals = ag.tensor(batch.num_vals.reshape(b, c, 1), dtype=dtype)
        num_tok = ag.affine(vals, self.store["num.w"], self.store["num.b"])
        num_tok = ag.mul(num_tok, ag.tensor(batch.num_mask[:, :, None], dtype=dtype))
        clamped = np.minimum(batch.cat_ids, self.cfg.max_cardinality)
        cat_tok = ag.embedding(self.store["cat.emb"], clamped)
        cat_tok = ag.mul(cat_tok, ag.tensor(batch.cat_mask[:, :, None], dtype=dtype))
        tokens = ag.add(num_tok, cat_tok)
        cls = ag.broadcast_to(
            ag.reshape(self.store["cls"], (1, 1, self.cfg.d_model)),
            (b, 1, self.cfg.d_model),
        )
        x = ag.concat([cls, tokens], axis=1)
        key_mask = np.concatenate(
            [np.ones((b, 1), dtype=bool), batch.col_mask], axis=1
        )
        h = encoder_forward(self.store, "enc", x, key_mask, self.enc_cfg, training, rng)
        out = ag.affine(ag.take_position(h, 0), self.store["head.w"], self.store["head.b"])
        return ag.reshape(out, (b,))

    def predict_encoded(self, rows, batch_size: int = 1024) -> np.ndarray:
        out = []
        for start in range(0, len(rows), batch_size):
            batch = variable_width_batching(rows[start : start + batch_size])
            out.append(sigmoid_np(self.logits(batch).data.astype(np.float64)))
        return np.concatenate(out)

    def predict_pool(
        self,
        records: list[RowRecord],
        indices,
        schemas: dict[str, tuple[ColumnSchema, ...]],
    ) -> np.ndarray:
        rows = [encode_row(records[int(i)], self.encoders) for i in indices]
        return self.predict_encoded(rows)

    def predict_records(self, records, schemas) -> np.ndarray:
        return self.predict_pool(records, range(len(records)), schemas)

    def save(self, directory, extra: dict | None = None) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_encoders(self.encoders, directory / "encoders.json")
        enc_hash = hashlib.sha256(
            (directory / "encoders.json").read_bytes()
        ).hexdigest()
        meta = {
            "kind": self.kind,
            "config": asdict(self.cfg),
            "artifacts": {"encoders_sha256": enc_hash},
        }
        if extra:
            meta.update(extra)
        save_checkpoint(self.store, directory, meta)

    @classmethod
    def load(cls, directory) -> "TableTransformer":
        directory = Path(directory)
        state, manifest = load_checkpoint(directory)
        if manifest["kind"] != cls.kind:
            raise ValueError(f"checkpoint kind {manifest['kind']!r} is not {cls.kind!r}")
        encoders = load_encoders(directory / "encoders.json")
        dtype = np.dtype(manifest["dtype"])
        model = cls(
            TableTransformerConfig(**manifest["config"]), dtype=dtype, encoders=encoders
        )
        model.store.restore(state)
        return model

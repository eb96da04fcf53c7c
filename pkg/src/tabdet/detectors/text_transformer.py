"""Character-level transformer over linearized rows."""

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
from ..text_encoding import CharVocab
from .batching import eval_linearize, tokenize_batch


@dataclass(frozen=True)
class TextTransformerConfig:
    d_model: int = 64
    layers: int = 2
    heads: int = 4
    ff: int = 128
    dropout: float = 0.1
    max_len: int = 512


class TextTransformer:
    """CLS classifier over char tokens with learned positional embeddings."""

    kind = "text_transformer"

    def __init__(
        self,
        vocab: CharVocab,
        cfg: TextTransformerConfig | None = None,
        dtype=np.float32,
        seed: int = 0,
    ):
        self.vocab = vocab
        self.cfg = cfg or TextTransformerConfig()
        self.enc_cfg = EncoderConfig(
            d_model=self.cfg.d_model,
            layers=self.cfg.layers,
            heads=self.cfg.heads,
            ff=self.cfg.ff,
            dropout=self.cfg.dropout,
        )
        self.enc_cfg.validate()
        d = self.cfg.d_model
        rng = np.random.default_rng(seed)
        store = ParamStore(dtype=dtype)
        store.add("emb.char", trunc_normal(rng, (len(vocab), d)))
        store.add("emb.pos", trunc_normal(rng, (self.cfg.max_len, d)))
        init_encoder(store, "enc", self.enc_cfg, rng)
        store.add("head.w", trunc_normal(rng, (d, 1)))
        store.add("head.b", np.zeros(1))
        self.store = store

    def logits(
        self,
        ids: np.ndarray,
        mask: np.ndarray,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        if ids.shape[1] > self.cfg.max_len:
            raise ValueError(
                f"sequence length {ids.shape[1]} exceeds max_len {self.cfg.max_len}"
            )
        x = ag.embedding(self.store["emb.char"], ids)
        pos = ag.embedding(self.store["emb.pos"], np.arange(ids.shape[1]))
        x = ag.add(x, pos)
        h = encoder_forward(self.store, "enc", x, mask, self.enc_cfg, training, rng)
        cls = ag.take_position(h, 0)
        out = ag.affine(cls, self.store["head.w"], self.store["head.b"])
        return ag.reshape(out, (ids.shape[0],))

    def predict_tokens(self, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return sigmoid_np(self.logits(ids, mask).data.astype(np.float64))

    def predict_pool(
        self,
        records: list[RowRecord],
        indices,
        schemas: dict[str, tuple[ColumnSchema, ...]],
        batch_size: int = 512,
    ) -> np.ndarray:
        lins = eval_linearize(records, indices, schemas)
        out = []
        for start in range(0, len(lins), batch_size):
            ids, mask = tokenize_batch(
                lins[start : start + batch_size], self.vocab, self.cfg.max_len
            )
            out.append(self.predict_tokens(ids, mask))
        return np.concatenate(out)

    def predict_records(self, records, schemas) -> np.ndarray:
        return self.predict_pool(records, range(len(records)), schemas)

    def save(self, directory, extra: dict | None = None) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.vocab.save(directory / "vocab.json")
        vocab_hash = hashlib.sha256(
            (directory / "vocab.json").read_bytes()
        ).hexdigest()
        meta = {
            "kind": self.kind,
            "config": asdict(self.cfg),
            "artifacts": {"vocab_sha256": vocab_hash},
        }
        if extra:
            meta.update(extra)
        save_checkpoint(self.store, directory, meta)

    @classmethod
    def load(cls, directory) -> "TextTransformer":
        directory = Path(directory)
        state, manifest = load_checkpoint(directory)
        if manifest["kind"] != cls.kind:
            raise ValueError(f"checkpoint kind {manifest['kind']!r} is not {cls.kind!r}")
        vocab = CharVocab.load(directory / "vocab.json")
        dtype = np.dtype(manifest["dtype"])
        model = cls(vocab, TextTransformerConfig(**manifest["config"]), dtype=dtype)
        model.store.restore(state)
        return model

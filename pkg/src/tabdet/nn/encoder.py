"""Transformer encoder blocks built on the autodiff tape.

Pre-norm blocks: ``x += MHA(LN(x))`` then ``x += FFN(LN(x))``, with a final
layer norm after the stack.  Padding is handled by a boolean key mask; the
CLS slot must always be visible so every query row has at least one key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from . import autograd as ag
from .autograd import Tensor
from .params import ParamStore, trunc_normal


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 64
    layers: int = 2
    heads: int = 4
    ff: int = 128
    dropout: float = 0.1

    def validate(self) -> None:
        if self.d_model % self.heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by heads {self.heads}"
            )


def init_encoder(store: ParamStore, prefix: str, cfg: EncoderConfig, rng) -> None:
    cfg.validate()
    d, ff = cfg.d_model, cfg.ff
    for layer in range(cfg.layers):
        p = f"{prefix}.l{layer}"
        store.add(f"{p}.ln1.gain", np.ones(d))
        store.add(f"{p}.ln1.bias", np.zeros(d))
        for proj in ("wq", "wk", "wv", "wo"):
            store.add(f"{p}.attn.{proj}", trunc_normal(rng, (d, d)))
        for proj in ("bq", "bk", "bv", "bo"):
            store.add(f"{p}.attn.{proj}", np.zeros(d))
        store.add(f"{p}.ln2.gain", np.ones(d))
        store.add(f"{p}.ln2.bias", np.zeros(d))
        store.add(f"{p}.ff.w1", trunc_normal(rng, (d, ff)))
        store.add(f"{p}.ff.b1", np.zeros(ff))
        store.add(f"{p}.ff.w2", trunc_normal(rng, (ff, d)))
        store.add(f"{p}.ff.b2", np.zeros(d))
    store.add(f"{prefix}.ln_f.gain", np.ones(d))
    store.add(f"{prefix}.ln_f.bias", np.zeros(d))


def _split_heads(x: Tensor, heads: int) -> Tensor:
    b, t, d = x.shape
    return ag.transpose(ag.reshape(x, (b, t, heads, d // heads)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    b, h, t, dk = x.shape
    return ag.reshape(ag.transpose(x, (0, 2, 1, 3)), (b, t, h * dk))


def multi_head_attention(
    store: ParamStore,
    prefix: str,
    x: Tensor,
    key_mask: np.ndarray,
    heads: int,
    return_probs: bool = False,
):
    """Scaled dot-product attention with padding mask over the key axis.

    ``key_mask`` is (batch, tokens) boolean, True for visible positions.
    Masked keys receive exactly zero attention weight.
    """
    b, t, d = x.shape
    if d % heads != 0:
        raise ConfigError(f"d_model {d} not divisible by heads {heads}")
    dk = d // heads
    q = _split_heads(ag.affine(x, store[f"{prefix}.wq"], store[f"{prefix}.bq"]), heads)
    k = _split_heads(ag.affine(x, store[f"{prefix}.wk"], store[f"{prefix}.bk"]), heads)
    v = _split_heads(ag.affine(x, store[f"{prefix}.wv"], store[f"{prefix}.bv"]), heads)
    scores = ag.scale(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dk))
    probs = ag.masked_softmax(scores, key_mask[:, None, None, :])
    ctx = _merge_heads(ag.matmul(probs, v))
    out = ag.affine(ctx, store[f"{prefix}.wo"], store[f"{prefix}.bo"])
    if return_probs:
        return out, probs
    return out


def encoder_forward(
    store: ParamStore,
    prefix: str,
    x: Tensor,
    key_mask: np.ndarray,
    cfg: EncoderConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    for layer in range(cfg.layers):
        p = f"{prefix}.l{layer}"
        h = ag.layer_norm(x, store[f"{p}.ln1.gain"], store[f"{p}.ln1.bias"])
        h = multi_head_attention(store, f"{p}.attn", h, key_mask, cfg.heads)
        h = ag.dropout(h, cfg.dropout, rng, training)
        x = ag.add(x, h)
        h = ag.layer_norm(x, store[f"{p}.ln2.gain"], store[f"{p}.ln2.bias"])
        h = ag.affine(h, store[f"{p}.ff.w1"], store[f"{p}.ff.b1"])
        h = ag.gelu(h)
        h = ag.affine(h, store[f"{p}.ff.w2"], store[f"{p}.ff.b2"])
        h = ag.dropout(h, cfg.dropout, rng, training)
        x = ag.add(x, h)
    return ag.layer_norm(x, store[f"{prefix}.ln_f.gain"], store[f"{prefix}.ln_f.bias"])

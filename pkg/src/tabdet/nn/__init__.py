"""Minimal dense-tensor numerical core with reverse-mode gradients."""

from . import autograd, kernels
from .autograd import Tensor, bce_with_logits, bce_with_logits_np, sigmoid_np
from .encoder import EncoderConfig, encoder_forward, init_encoder, multi_head_attention
from .optim import Adam
from .params import ParamStore, load_checkpoint, save_checkpoint, trunc_normal

__all__ = [
    "Adam",
    "EncoderConfig",
    "ParamStore",
    "Tensor",
    "autograd",
    "bce_with_logits",
    "bce_with_logits_np",
    "encoder_forward",
    "init_encoder",
    "kernels",
    "load_checkpoint",
    "multi_head_attention",
    "save_checkpoint",
    "sigmoid_np",
    "trunc_normal",
]

"""Reverse-mode autodiff over numpy arrays, sized for small encoder models.

A :class:`Tensor` wraps an ndarray and records a backward closure when any
input requires gradients.  ``loss.backward()`` walks the tape in reverse
topological order and accumulates ``.grad`` arrays on the leaves.  Heavy
inner loops (layer norm, masked softmax, gelu, embedding scatter-add) are
delegated to :mod:`tabdet.nn.kernels`.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = tuple(_parents) if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self):
        """Backpropagate from this tensor; it is seeded with ones."""
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def tensor(data, requires_grad=False, dtype=None):
    arr = np.asarray(data, dtype=dtype)
    return Tensor(arr, requires_grad=requires_grad)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return Tensor(out_data, _parents=(a, b), _backward=bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return Tensor(out_data, _parents=(a, b), _backward=bwd)


def scale(a: Tensor, s: float) -> Tensor:
    out_data = a.data * s

    def bwd(g):
        _accum(a, g * s)

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs >=2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} vs {b.shape}")
    out_data = a.data @ b.data

    def bwd(g):
        da = g @ b.data.swapaxes(-1, -2)
        db = a.data.swapaxes(-1, -2) @ g
        _accum(a, _unbroadcast(da, a.data.shape))
        _accum(b, _unbroadcast(db, b.data.shape))

    return Tensor(out_data, _parents=(a, b), _backward=bwd)


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def bwd(g):
        _accum(a, g.reshape(a.data.shape))

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def transpose(a: Tensor, axes) -> Tensor:
    out_data = a.data.transpose(axes)
    inverse = tuple(np.argsort(axes))

    def bwd(g):
        _accum(a, g.transpose(inverse))

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def broadcast_to(a: Tensor, shape) -> Tensor:
    out_data = np.broadcast_to(a.data, shape)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def concat(parts: list[Tensor], axis: int) -> Tensor:
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        for part, piece in zip(parts, np.split(g, splits, axis=axis)):
            _accum(part, piece)

    return Tensor(out_data, _parents=tuple(parts), _backward=bwd)


def mean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    out_data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.data.shape[axis]

    def bwd(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape) / count)

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def bwd(g):
        _accum(a, g * (a.data > 0))

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def gelu(a: Tensor) -> Tensor:
    flat = np.ascontiguousarray(a.data.reshape(-1))
    out_data = kernels.gelu_fwd(flat).reshape(a.data.shape)

    def bwd(g):
        gflat = np.ascontiguousarray(g.reshape(-1))
        _accum(a, kernels.gelu_bwd(flat, gflat).reshape(a.data.shape))

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    d = a.shape[-1]
    x2 = np.ascontiguousarray(a.data.reshape(-1, d))
    y2, mu, rstd = kernels.layernorm_fwd(x2, gain.data, bias.data, eps)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(-1, d))
        dx, dgain, dbias = kernels.layernorm_bwd(g2, x2, gain.data, mu, rstd)
        _accum(a, dx.reshape(a.data.shape))
        _accum(gain, dgain)
        _accum(bias, dbias)

    return Tensor(y2.reshape(a.data.shape), _parents=(a, gain, bias), _backward=bwd)


def masked_softmax(a: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to ``mask`` (True = visible).

    Masked positions get exactly zero weight; a fully-masked row yields an
    all-zero row rather than NaN.
    """
    t = a.shape[-1]
    full_mask = np.ascontiguousarray(np.broadcast_to(mask, a.data.shape).reshape(-1, t))
    x2 = np.ascontiguousarray(a.data.reshape(-1, t))
    p2 = kernels.softmax_fwd(x2, full_mask)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(-1, t))
        _accum(a, kernels.softmax_bwd(p2, g2).reshape(a.data.shape))

    return Tensor(p2.reshape(a.data.shape), _parents=(a,), _backward=bwd)


def softmax(a: Tensor) -> Tensor:
    return masked_softmax(a, np.ones(a.shape, dtype=bool))


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    out_data = table.data[ids]

    def bwd(g):
        if not table.requires_grad:
            return
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        flat_ids = np.ascontiguousarray(ids.reshape(-1))
        g2 = np.ascontiguousarray(g.reshape(-1, table.data.shape[1]))
        kernels.embedding_grad(flat_ids, g2, table.grad)

    return Tensor(out_data, _parents=(table,), _backward=bwd)


def take_position(a: Tensor, pos: int) -> Tensor:
    """Select ``a[:, pos, :]`` (used to read the CLS slot)."""
    out_data = a.data[:, pos, :]

    def bwd(g):
        full = np.zeros_like(a.data)
        full[:, pos, :] = g
        _accum(a, full)

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    if not training or rate <= 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate).astype(a.data.dtype)
    factor = 1.0 / (1.0 - rate)
    out_data = a.data * keep * factor

    def bwd(g):
        _accum(a, g * keep * factor)

    return Tensor(out_data, _parents=(a,), _backward=bwd)


def sigmoid_np(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function on plain arrays."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits_np(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-example binary cross entropy in the stable log-sum-exp form."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


def bce_with_logits(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean BCE loss over a batch of logits; gradient is sigmoid(z) - y."""
    z = logits.data
    y = np.asarray(labels, dtype=z.dtype)
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out_data = np.asarray(per.mean(), dtype=z.dtype)

    def bwd(g):
        _accum(logits, ((sigmoid_np(z) - y) * (g / z.size)).astype(z.dtype))

    return Tensor(out_data, _parents=(logits,), _backward=bwd)


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with bias broadcast over leading axes."""
    return add(matmul(x, w), b)

"""Hot numeric kernels, numba-jitted with a pure-numpy fallback.

The backend is picked once at import time from the ``TABDET_BACKEND``
environment variable:

* ``numba`` -- force the jitted kernels (ImportError if numba is missing)
* ``numpy`` -- force the pure-numpy fallback
* unset / ``auto`` -- numba when importable, numpy otherwise

Both implementations stay importable through :data:`IMPLS` so the parity
tests and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "IMPLS",
    "adam_update",
    "embedding_grad",
    "gelu_bwd",
    "gelu_fwd",
    "hash_trigrams",
    "layernorm_bwd",
    "layernorm_fwd",
    "softmax_bwd",
    "softmax_fwd",
    "sparse_grad_accum",
    "sparse_logits",
]

_FNV_OFFSET = np.uint64(14695981039346656037)
_FNV_PRIME = np.uint64(1099511628211)

# tanh-form gelu constants
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def _pick_backend() -> str:
    choice = os.environ.get("TABDET_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"TABDET_BACKEND must be 'numba', 'numpy' or 'auto', got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _pick_backend()


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _layernorm_fwd_np(x, gain, bias, eps):
    mean = x.mean(axis=1)
    var = x.var(axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[:, None]) * rstd[:, None]
    y = xhat * gain + bias
    return y.astype(x.dtype, copy=False), mean.astype(x.dtype), rstd.astype(x.dtype)


def _layernorm_bwd_np(dy, x, gain, mean, rstd):
    xhat = (x - mean[:, None]) * rstd[:, None]
    dxhat = dy * gain
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = rstd[:, None] * (dxhat - m1 - xhat * m2)
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    return dx.astype(x.dtype, copy=False), dgain, dbias


def _softmax_fwd_np(scores, mask):
    neg = np.where(mask, scores, -np.inf)
    rowmax = neg.max(axis=1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    e = np.exp(neg - rowmax)
    e = np.where(mask, e, 0.0)
    denom = e.sum(axis=1, keepdims=True)
    denom = np.where(denom == 0.0, 1.0, denom)
    return (e / denom).astype(scores.dtype, copy=False)


def _softmax_bwd_np(p, dy):
    dot = (p * dy).sum(axis=1, keepdims=True)
    return (p * (dy - dot)).astype(p.dtype, copy=False)


def _gelu_fwd_np(x):
    u = _GELU_C * (x + _GELU_A * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(u))


def _gelu_bwd_np(x, dy):
    u = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def _adam_update_np(p, g, m, v, lr, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def _embedding_grad_np(ids, dy, out):
    np.add.at(out, ids, dy)


def _hash_trigrams_np(codes, n_buckets):
    n = max(codes.shape[0] - 2, 0)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    h = np.full(n, _FNV_OFFSET, dtype=np.uint64)
    for k in range(3):
        h = (h ^ codes[k : k + n]) * _FNV_PRIME
    return (h & np.uint64(n_buckets - 1)).astype(np.int64)


def _sparse_logits_np(indices, values, offsets, w):
    prod = w[indices] * values
    cs = np.concatenate(([0.0], np.cumsum(prod)))
    return cs[offsets[1:]] - cs[offsets[:-1]]


def _sparse_grad_accum_np(indices, values, offsets, coeffs, out):
    per_nnz = np.repeat(coeffs, np.diff(offsets))
    np.add.at(out, indices, per_nnz * values)


_NUMPY_IMPLS = {
    "layernorm_fwd": _layernorm_fwd_np,
    "layernorm_bwd": _layernorm_bwd_np,
    "softmax_fwd": _softmax_fwd_np,
    "softmax_bwd": _softmax_bwd_np,
    "gelu_fwd": _gelu_fwd_np,
    "gelu_bwd": _gelu_bwd_np,
    "adam_update": _adam_update_np,
    "embedding_grad": _embedding_grad_np,
    "hash_trigrams": _hash_trigrams_np,
    "sparse_logits": _sparse_logits_np,
    "sparse_grad_accum": _sparse_grad_accum_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


def _build_numba_impls():
    from numba import njit

    @njit(cache=True)
    def layernorm_fwd(x, gain, bias, eps):
        r, d = x.shape
        y = np.empty_like(x)
        mean = np.empty(r, dtype=x.dtype)
        rstd = np.empty(r, dtype=x.dtype)
        for i in range(r):
            s = 0.0
            for j in range(d):
                s += x[i, j]
            mu = s / d
            q = 0.0
            for j in range(d):
                diff = x[i, j] - mu
                q += diff * diff
            rs = 1.0 / math.sqrt(q / d + eps)
            mean[i] = mu
            rstd[i] = rs
            for j in range(d):
                y[i, j] = (x[i, j] - mu) * rs * gain[j] + bias[j]
        return y, mean, rstd

    @njit(cache=True)
    def layernorm_bwd(dy, x, gain, mean, rstd):
        r, d = x.shape
        dx = np.empty_like(x)
        dgain = np.zeros(d, dtype=x.dtype)
        dbias = np.zeros(d, dtype=x.dtype)
        for i in range(r):
            mu = mean[i]
            rs = rstd[i]
            m1 = 0.0
            m2 = 0.0
            for j in range(d):
                xh = (x[i, j] - mu) * rs
                dxh = dy[i, j] * gain[j]
                m1 += dxh
                m2 += dxh * xh
                dgain[j] += dy[i, j] * xh
                dbias[j] += dy[i, j]
            m1 /= d
            m2 /= d
            for j in range(d):
                xh = (x[i, j] - mu) * rs
                dxh = dy[i, j] * gain[j]
                dx[i, j] = rs * (dxh - m1 - xh * m2)
        return dx, dgain, dbias

    @njit(cache=True)
    def softmax_fwd(scores, mask):
        r, t = scores.shape
        p = np.zeros_like(scores)
        for i in range(r):
            rowmax = -np.inf
            for j in range(t):
                if mask[i, j] and scores[i, j] > rowmax:
                    rowmax = scores[i, j]
            if rowmax == -np.inf:
                continue
            denom = 0.0
            for j in range(t):
                if mask[i, j]:
                    e = math.exp(scores[i, j] - rowmax)
                    p[i, j] = e
                    denom += e
            for j in range(t):
                p[i, j] /= denom
        return p

    @njit(cache=True)
    def softmax_bwd(p, dy):
        r, t = p.shape
        ds = np.empty_like(p)
        for i in range(r):
            dot = 0.0
            for j in range(t):
                dot += p[i, j] * dy[i, j]
            for j in range(t):
                ds[i, j] = p[i, j] * (dy[i, j] - dot)
        return ds

    @njit(cache=True)
    def gelu_fwd(x):
        out = np.empty_like(x)
        for i in range(x.shape[0]):
            u = _GELU_C * (x[i] + _GELU_A * x[i] * x[i] * x[i])
            out[i] = 0.5 * x[i] * (1.0 + math.tanh(u))
        return out

    @njit(cache=True)
    def gelu_bwd(x, dy):
        out = np.empty_like(x)
        for i in range(x.shape[0]):
            u = _GELU_C * (x[i] + _GELU_A * x[i] * x[i] * x[i])
            t = math.tanh(u)
            du = _GELU_C * (1.0 + 3.0 * _GELU_A * x[i] * x[i])
            out[i] = dy[i] * (0.5 * (1.0 + t) + 0.5 * x[i] * (1.0 - t * t) * du)
        return out

    @njit(cache=True)
    def adam_update(p, g, m, v, lr, beta1, beta2, eps, t):
        c1 = 1.0 - beta1**t
        c2 = 1.0 - beta2**t
        for i in range(p.shape[0]):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
            mhat = m[i] / c1
            vhat = v[i] / c2
            p[i] -= lr * mhat / (math.sqrt(vhat) + eps)

    @njit(cache=True)
    def embedding_grad(ids, dy, out):
        n, d = dy.shape
        for i in range(n):
            row = ids[i]
            for j in range(d):
                out[row, j] += dy[i, j]

    @njit(cache=True)
    def hash_trigrams(codes, n_buckets):
        n = codes.shape[0] - 2
        if n < 0:
            n = 0
        out = np.empty(n, dtype=np.int64)
        bucket_mask = np.uint64(n_buckets - 1)
        for i in range(n):
            h = _FNV_OFFSET
            for k in range(3):
                h = (h ^ codes[i + k]) * _FNV_PRIME
            out[i] = np.int64(h & bucket_mask)
        return out

    @njit(cache=True)
    def sparse_logits(indices, values, offsets, w):
        b = offsets.shape[0] - 1
        z = np.zeros(b, dtype=w.dtype)
        for i in range(b):
            acc = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                acc += w[indices[j]] * values[j]
            z[i] = acc
        return z

    @njit(cache=True)
    def sparse_grad_accum(indices, values, offsets, coeffs, out):
        b = offsets.shape[0] - 1
        for i in range(b):
            c = coeffs[i]
            for j in range(offsets[i], offsets[i + 1]):
                out[indices[j]] += c * values[j]

    return {
        "layernorm_fwd": layernorm_fwd,
        "layernorm_bwd": layernorm_bwd,
        "softmax_fwd": softmax_fwd,
        "softmax_bwd": softmax_bwd,
        "gelu_fwd": gelu_fwd,
        "gelu_bwd": gelu_bwd,
        "adam_update": adam_update,
        "embedding_grad": embedding_grad,
        "hash_trigrams": hash_trigrams,
        "sparse_logits": sparse_logits,
        "sparse_grad_accum": sparse_grad_accum,
    }


IMPLS: dict[str, dict] = {"numpy": _NUMPY_IMPLS}
try:
    import numba  # noqa: F401

    IMPLS["numba"] = _build_numba_impls()
except ImportError:
    pass

_ACTIVE = IMPLS[BACKEND]

layernorm_fwd = _ACTIVE["layernorm_fwd"]
layernorm_bwd = _ACTIVE["layernorm_bwd"]
softmax_fwd = _ACTIVE["softmax_fwd"]
softmax_bwd = _ACTIVE["softmax_bwd"]
gelu_fwd = _ACTIVE["gelu_fwd"]
gelu_bwd = _ACTIVE["gelu_bwd"]
adam_update = _ACTIVE["adam_update"]
embedding_grad = _ACTIVE["embedding_grad"]
hash_trigrams = _ACTIVE["hash_trigrams"]
sparse_logits = _ACTIVE["sparse_logits"]
sparse_grad_accum = _ACTIVE["sparse_grad_accum"]

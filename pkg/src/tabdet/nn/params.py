"""Named parameter storage, initialization, and flat-binary checkpoints."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .autograd import Tensor

CHECKPOINT_FORMAT = "tabdet-checkpoint-v1"


class ParamStore:
    """Ordered mapping of parameter names to trainable tensors."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, array: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.ascontiguousarray(array, dtype=self.dtype), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def restore(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self._params.items():
            arr = state[name]
            if arr.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: {arr.shape} vs {t.data.shape}"
                )
            t.data[...] = arr


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Normal(0, std) resampled until every draw lies within 2 std."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2.0 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * std
    return out


def save_checkpoint(store: ParamStore, directory, extra: dict | None = None) -> Path:
    """Write checkpoint.bin (raw little-endian data) + checkpoint.json manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dtype = store.dtype.newbyteorder("<")
    tensors = []
    offset = 0
    chunks = []
    for name, t in store.items():
        arr = np.ascontiguousarray(t.data, dtype=dtype)
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size
        chunks.append(arr.tobytes())
    blob = b"".join(chunks)
    (directory / "checkpoint.bin").write_bytes(blob)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "dtype": store.dtype.name,
        "byteorder": "little",
        "tensors": tensors,
        "bin_sha256": hashlib.sha256(blob).hexdigest(),
    }
    if extra:
        manifest.update(extra)
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True)
    (directory / "checkpoint.json").write_text(manifest_text, encoding="utf-8")
    return directory / "checkpoint.json"


def load_checkpoint(directory) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint directory back into {name: array} plus its manifest."""
    directory = Path(directory)
    manifest = json.loads((directory / "checkpoint.json").read_text(encoding="utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {manifest.get('format')!r}")
    dtype = np.dtype(manifest["dtype"]).newbyteorder("<")
    blob = (directory / "checkpoint.bin").read_bytes()
    state = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"] * dtype.itemsize
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=start)
        state[entry["name"]] = arr.reshape(shape).astype(manifest["dtype"])
    return state, manifest

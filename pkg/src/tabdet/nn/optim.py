"""Adam with bias correction, applied in place over a ParamStore."""

from __future__ import annotations

import numpy as np

from . import kernels
from .params import ParamStore


class Adam:
    def __init__(
        self,
        store: ParamStore,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.store = store
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._m = {name: np.zeros_like(t.data) for name, t in store.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in store.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.store.items():
            if p.grad is None:
                continue
            kernels.adam_update(
                p.data.reshape(-1),
                np.ascontiguousarray(p.grad.reshape(-1)),
                self._m[name].reshape(-1),
                self._v[name].reshape(-1),
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                self.t,
            )

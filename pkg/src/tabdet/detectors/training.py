"""Training loops: BCE minimized by Adam, per-epoch AUC curves, best-epoch
selection on validation AUC.

Text-path models resample the column permutation of every training row at
every epoch; the per-epoch AUCs are computed on fixed evaluation
linearizations so curves are comparable across epochs and runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..ingestion import ColumnSchema, RowRecord
from ..metrics import roc_auc
from ..nn import kernels
from ..nn.autograd import bce_with_logits, sigmoid_np
from ..nn.optim import Adam
from ..splits import SplitPlan
from ..table_encoding import encode_row, fit_encoders_for_plan
from ..text_encoding import build_char_vocab, extract_trigrams
from .batching import (
    bags_to_csr,
    epoch_linearize,
    eval_linearize,
    tokenize_batch,
    variable_width_batching,
)
from .table_transformer import TableTransformer, TableTransformerConfig
from .text_transformer import TextTransformer, TextTransformerConfig
from .trigram_logreg import TrigramLogReg, TrigramLogRegConfig

MODEL_KINDS = ("trigram_logreg", "text_transformer", "table_transformer")

_PERM_STREAM = 0xA
_SHUFFLE_STREAM = 0xB
_DROPOUT_STREAM = 0xC


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 50
    batch_size: int = 256
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"
    seed: int = 0
    n_quantiles: int = 1000


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_auc: float
    val_auc: float


@dataclass
class TrainResult:
    model: object
    curves: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_auc: float = 0.0


def _epoch_rng(seed: int, epoch: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, stream])


def _labels_for(records, indices) -> np.ndarray:
    return np.asarray(
        [records[int(i)].binary_label for i in indices], dtype=np.float64
    )


def _check_sides(records, plan: SplitPlan) -> None:
    for side_name, side in (("train", plan.train), ("val", plan.val)):
        if len(side) == 0:
            raise ValueError(f"{side_name} split is empty")
        got = {records[int(i)].binary_label for i in side}
        if got != {0, 1}:
            raise ValueError(
                f"{side_name} split has a single class {sorted(got)}; AUC is undefined"
            )


class _BestTracker:
    """Keep the parameter snapshot of the best validation AUC epoch."""

    def __init__(self):
        self.best_val = -np.inf
        self.best_epoch = 0
        self.snapshot = None

    def update(self, epoch: int, val_auc: float, take_snapshot) -> None:
        if val_auc > self.best_val:
            self.best_val = val_auc
            self.best_epoch = epoch
            self.snapshot = take_snapshot()


def train_trigram_logreg(
    records: list[RowRecord],
    schemas: dict[str, tuple[ColumnSchema, ...]],
    plan: SplitPlan,
    settings: TrainSettings,
    cfg: TrigramLogRegConfig | None = None,
) -> TrainResult:
    _check_sides(records, plan)
    model = TrigramLogReg(cfg)
    opt = Adam(model.store, settings.lr, settings.beta1, settings.beta2, settings.eps)
    y_train = _labels_for(records, plan.train)
    y_val = _labels_for(records, plan.val)

    eval_train = bags_to_csr(
        [extract_trigrams(l) for l in eval_linearize(records, plan.train, schemas)]
    )
    eval_val = bags_to_csr(
        [extract_trigrams(l) for l in eval_linearize(records, plan.val, schemas)]
    )

    result = TrainResult(model)
    tracker = _BestTracker()
    n = len(plan.train)
    for epoch in range(1, settings.epochs + 1):
        perm_rng = _epoch_rng(settings.seed, epoch, _PERM_STREAM)
        shuffle_rng = _epoch_rng(settings.seed, epoch, _SHUFFLE_STREAM)
        lins = epoch_linearize(records, plan.train, schemas, perm_rng)
        bags = [extract_trigrams(l) for l in lins]
        order = shuffle_rng.permutation(n)
        for start in range(0, n, settings.batch_size):
            sel = order[start : start + settings.batch_size]
            indices, values, offsets = bags_to_csr([bags[s] for s in sel])
            z = model.logits_csr(indices, values, offsets)
            coeff = (sigmoid_np(z) - y_train[sel]) / len(sel)
            gw = np.zeros(model.cfg.n_buckets, dtype=np.float64)
            kernels.sparse_grad_accum(indices, values, offsets, coeff, gw)
            gw += model.cfg.l2 * model.weights
            model.store["w"].grad = gw
            model.store["b"].grad = np.array([coeff.sum()])
            opt.step()
            model.store.zero_grad()
        train_auc = roc_auc(model.predict_csr(*eval_train), y_train)
        val_auc = roc_auc(model.predict_csr(*eval_val), y_val)
        result.curves.append(EpochRecord(epoch, train_auc, val_auc))
        tracker.update(epoch, val_auc, model.store.snapshot)
    model.store.restore(tracker.snapshot)
    result.best_epoch = tracker.best_epoch
    result.best_val_auc = tracker.best_val
    return result


def _score_tokens(model: TextTransformer, ids, mask, batch_size: int = 512) -> np.ndarray:
    out = []
    for start in range(0, ids.shape[0], batch_size):
        out.append(model.predict_tokens(ids[start : start + batch_size], mask[start : start + batch_size]))
    return np.concatenate(out)


def train_text_transformer(
    records: list[RowRecord],
    schemas: dict[str, tuple[ColumnSchema, ...]],
    plan: SplitPlan,
    settings: TrainSettings,
    cfg: TextTransformerConfig | None = None,
) -> TrainResult:
    _check_sides(records, plan)
    cfg = cfg or TextTransformerConfig()
    y_train = _labels_for(records, plan.train)
    y_val = _labels_for(records, plan.val)

    train_lins_eval = eval_linearize(records, plan.train, schemas)
    vocab = build_char_vocab(train_lins_eval)
    model = TextTransformer(vocab, cfg, dtype=np.dtype(settings.dtype), seed=settings.seed)
    opt = Adam(model.store, settings.lr, settings.beta1, settings.beta2, settings.eps)

    eval_train = tokenize_batch(train_lins_eval, vocab, cfg.max_len)
    eval_val = tokenize_batch(
        eval_linearize(records, plan.val, schemas), vocab, cfg.max_len
    )

    result = TrainResult(model)
    tracker = _BestTracker()
    n = len(plan.train)
    for epoch in range(1, settings.epochs + 1):
        perm_rng = _epoch_rng(settings.seed, epoch, _PERM_STREAM)
        shuffle_rng = _epoch_rng(settings.seed, epoch, _SHUFFLE_STREAM)
        drop_rng = _epoch_rng(settings.seed, epoch, _DROPOUT_STREAM)
        lins = epoch_linearize(records, plan.train, schemas, perm_rng)
        order = shuffle_rng.permutation(n)
        for start in range(0, n, settings.batch_size):
            sel = order[start : start + settings.batch_size]
            ids, mask = tokenize_batch([lins[s] for s in sel], vocab, cfg.max_len)
            loss = bce_with_logits(
                model.logits(ids, mask, training=True, rng=drop_rng), y_train[sel]
            )
            model.store.zero_grad()
            loss.backward()
            opt.step()
        train_auc = roc_auc(_score_tokens(model, *eval_train), y_train)
        val_auc = roc_auc(_score_tokens(model, *eval_val), y_val)
        result.curves.append(EpochRecord(epoch, train_auc, val_auc))
        tracker.update(epoch, val_auc, model.store.snapshot)
    model.store.restore(tracker.snapshot)
    result.best_epoch = tracker.best_epoch
    result.best_val_auc = tracker.best_val
    return result


def train_table_transformer(
    records: list[RowRecord],
    schemas: dict[str, tuple[ColumnSchema, ...]],
    plan: SplitPlan,
    settings: TrainSettings,
    cfg: TableTransformerConfig | None = None,
) -> TrainResult:
    _check_sides(records, plan)
    cfg = cfg or TableTransformerConfig()
    y_train = _labels_for(records, plan.train)
    y_val = _labels_for(records, plan.val)

    encoders = fit_encoders_for_plan(
        records,
        schemas,
        {"train": plan.train, "val": plan.val, "test": plan.test},
        settings.n_quantiles,
    )
    model = TableTransformer(
        cfg, dtype=np.dtype(settings.dtype), seed=settings.seed, encoders=encoders
    )
    opt = Adam(model.store, settings.lr, settings.beta1, settings.beta2, settings.eps)

    rows_train = [encode_row(records[int(i)], encoders) for i in plan.train]
    rows_val = [encode_row(records[int(i)], encoders) for i in plan.val]

    result = TrainResult(model)
    tracker = _BestTracker()
    n = len(rows_train)
    for epoch in range(1, settings.epochs + 1):
        shuffle_rng = _epoch_rng(settings.seed, epoch, _SHUFFLE_STREAM)
        drop_rng = _epoch_rng(settings.seed, epoch, _DROPOUT_STREAM)
        order = shuffle_rng.permutation(n)
        for start in range(0, n, settings.batch_size):
            sel = order[start : start + settings.batch_size]
            batch = variable_width_batching([rows_train[s] for s in sel])
            loss = bce_with_logits(
                model.logits(batch, training=True, rng=drop_rng), y_train[sel]
            )
            model.store.zero_grad()
            loss.backward()
            opt.step()
        train_auc = roc_auc(model.predict_encoded(rows_train), y_train)
        val_auc = roc_auc(model.predict_encoded(rows_val), y_val)
        result.curves.append(EpochRecord(epoch, train_auc, val_auc))
        tracker.update(epoch, val_auc, model.store.snapshot)
    model.store.restore(tracker.snapshot)
    result.best_epoch = tracker.best_epoch
    result.best_val_auc = tracker.best_val
    return result


def train_detector(
    kind: str,
    records: list[RowRecord],
    schemas: dict[str, tuple[ColumnSchema, ...]],
    plan: SplitPlan,
    settings: TrainSettings,
    model_cfg=None,
) -> TrainResult:
    if kind == "trigram_logreg":
        return train_trigram_logreg(records, schemas, plan, settings, model_cfg)
    if kind == "text_transformer":
        return train_text_transformer(records, schemas, plan, settings, model_cfg)
    if kind == "table_transformer":
        return train_table_transformer(records, schemas, plan, settings, model_cfg)
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")

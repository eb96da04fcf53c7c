"""ROC-AUC (rank-sum with tie handling) and thresholded accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalResult:
    auc: float
    accuracy: float
    n_pos: int
    n_neg: int
    threshold: float = 0.5


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted 1/2.

    O(n log n) via midranks; raises if either class is absent.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"roc_auc needs both classes, got n_pos={n_pos}, n_neg={n_neg}"
        )
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts
    # 1-based midrank of each distinct value's tie group
    midranks = starts + (counts + 1) / 2.0
    ranks = midranks[inverse]
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of correct predictions; score >= threshold predicts synthetic."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("accuracy needs at least one example")
    preds = (scores >= threshold).astype(labels.dtype)
    return float((preds == labels).mean())


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalResult:
    labels = np.asarray(labels)
    return EvalResult(
        auc=roc_auc(scores, labels),
        accuracy=accuracy(scores, labels, threshold),
        n_pos=int((labels == 1).sum()),
        n_neg=int((labels == 0).sum()),
        threshold=threshold,
    )

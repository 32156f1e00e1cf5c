"""Evaluation metrics: confusion matrix, weighted precision/recall/F, OvO AUC.

Conventions used throughout:

- confusion rows are true classes, columns predicted classes;
- a precision whose denominator is zero (the class was never predicted)
  is reported as 0 with a warning rather than an error;
- a recall whose denominator is zero (the class is absent from the truth)
  is undefined and reported as NaN; such classes carry zero support and
  drop out of every weighted average;
- weighted recall equals accuracy by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .ingest import AbsenteeismClass

N_CLASSES = 3


def confusion(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    """Count matrix with rows indexed by true class, columns by predicted."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("label vectors must be 1-d and equal length")
    if y_true.size == 0:
        raise ValueError("cannot build a confusion matrix from zero samples")
    for name, v in (("true", y_true), ("predicted", y_pred)):
        if v.min() < 0 or v.max() >= n_classes:
            raise ValueError(f"{name} labels fall outside 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def accuracy(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    return float(np.trace(cm) / cm.sum())


def per_class_precision(cm: np.ndarray) -> np.ndarray:
    """Column-wise precision; classes never predicted report 0 with a warning."""
    cm = np.asarray(cm, dtype=np.float64)
    col = cm.sum(axis=0)
    out = np.zeros(cm.shape[0])
    for c in range(cm.shape[0]):
        if col[c] == 0:
            warnings.warn(
                f"precision undefined for class {_label(c)} (never predicted), reporting 0",
                stacklevel=2,
            )
        else:
            out[c] = cm[c, c] / col[c]
    return out


def per_class_recall(cm: np.ndarray) -> np.ndarray:
    """Row-wise recall; classes absent from the truth report NaN."""
    cm = np.asarray(cm, dtype=np.float64)
    row = cm.sum(axis=1)
    out = np.full(cm.shape[0], np.nan)
    present = row > 0
    out[present] = np.diag(cm)[present] / row[present]
    return out


def f_score(precision: float, recall: float, alpha: float = 1.0) -> float:
    """(1 + a^2) P R / (a^2 (P + R)); zero when both P and R vanish.

    At a=1 this is the usual harmonic mean of precision and recall.
    """
    if precision < 0 or recall < 0:
        raise ValueError("precision and recall must be non-negative")
    denom = alpha * alpha * (precision + recall)
    if denom == 0.0:
        return 0.0
    return (1.0 + alpha * alpha) * precision * recall / denom


def _label(c: int) -> str:
    try:
        return AbsenteeismClass(c).label
    except ValueError:
        return str(c)


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Rank-based AUC with the tie convention worth one half.

    Equivalent to the probability that a random positive outranks a random
    negative, counting exact score ties as half.
    """
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("binary AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc_ovo_weighted(y_true: np.ndarray, scores: np.ndarray) -> float:
    """One-vs-one AUC averaged over class pairs with prevalence weights.

    For each unordered pair (i, j) the samples are restricted to those two
    classes; the pair AUC is the mean of AUC(i positive, scored by column
    i) and AUC(j positive, scored by column j). Pair weights are the
    restricted sample counts n_i + n_j, normalized over the pairs that
    could be evaluated. Pairs missing a class are skipped with a warning;
    if no pair survives, ValueError.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != y_true.shape[0]:
        raise ValueError("scores must be (n_samples, n_classes) aligned with labels")
    n_classes = scores.shape[1]
    total_w = 0.0
    acc = 0.0
    evaluated = 0
    for i in range(n_classes):
        for j in range(i + 1, n_classes):
            mask = (y_true == i) | (y_true == j)
            n_i = int(np.sum(y_true == i))
            n_j = int(np.sum(y_true == j))
            if n_i == 0 or n_j == 0:
                warnings.warn(
                    f"pair ({_label(i)}, {_label(j)}) missing a class, skipped",
                    stacklevel=2,
                )
                continue
            sub_y = y_true[mask]
            a_ij = _binary_auc(scores[mask, i], sub_y == i)
            a_ji = _binary_auc(scores[mask, j], sub_y == j)
            w = float(n_i + n_j)
            acc += w * (a_ij + a_ji) / 2.0
            total_w += w
            evaluated += 1
    if evaluated == 0:
        raise ValueError("no class pair has both classes present")
    return acc / total_w


@dataclass
class MetricsReport:
    """Everything the benchmark records about one model evaluation."""

    confusion: np.ndarray
    accuracy: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    auc: float | None = None
    support: tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision": list(self.precision),
            "recall": [None if np.isnan(r) else r for r in self.recall],
            "f1": list(self.f1),
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "auc": self.auc,
            "support": list(self.support),
        }


def evaluate_predictions(y_true: np.ndarray, y_pred: np.ndarray,
                         scores: np.ndarray | None = None,
                         n_classes: int = N_CLASSES) -> MetricsReport:
    """Compute the full report for one set of predictions.

    ``scores`` (per-class probabilities or decision values) is optional;
    without it the AUC entry stays None.
    """
    cm = confusion(y_true, y_pred, n_classes)
    support = cm.sum(axis=1)
    n = support.sum()
    prec = per_class_precision(cm)
    rec = per_class_recall(cm)
    f1 = np.array([
        f_score(prec[c], 0.0 if np.isnan(rec[c]) else rec[c]) for c in range(n_classes)
    ])
    present = support > 0
    w_prec = float(np.sum(support[present] * prec[present]) / n)
    w_rec = float(np.sum(support[present] * rec[present]) / n)
    w_f1 = float(np.sum(support[present] * f1[present]) / n)
    auc = None
    if scores is not None:
        auc = roc_auc_ovo_weighted(y_true, scores)
    return MetricsReport(
        confusion=cm,
        accuracy=accuracy(cm),
        precision=tuple(float(p) for p in prec),
        recall=tuple(float(r) for r in rec),
        f1=tuple(float(v) for v in f1),
        weighted_precision=w_prec,
        weighted_recall=w_rec,
        weighted_f1=w_f1,
        auc=auc,
        support=tuple(int(s) for s in support),
    )

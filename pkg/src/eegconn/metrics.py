"""Confusion-based metrics and tie-aware ROC/AUC.

AUC is accumulated in integer arithmetic over the threshold sweep, so it
equals the Mann-Whitney pair statistic P(s_pos > s_neg) + 0.5 * P(tie)
exactly, not merely to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class Rates:
    """precision/recall/accuracy with explicit zero-denominator flags.

    An undefined metric is reported as 0.0 with its *_defined flag False so
    aggregates stay total instead of going NaN.
    """

    precision: float
    recall: float
    accuracy: float
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass
class RocCurve:
    """Threshold sweep from (0,0) to (1,1); thresholds[i] produced points[i]
    (the first entry is +inf: predict nothing positive)."""

    points: list  # [(fpr, tpr)]
    thresholds: list


def confusion(labels, predictions) -> ConfusionCounts:
    """Standard two-class counts with class 1 taken as positive."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.size == 0:
        raise DataError("confusion needs at least one example")
    if y.shape != p.shape:
        raise DataError(f"length mismatch: {y.shape} labels vs {p.shape} predictions")
    for name, arr in (("labels", y), ("predictions", p)):
        if not np.isin(arr, (0, 1)).all():
            raise DataError(f"{name} must be binary (0/1)")
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def precision_recall_accuracy(c: ConfusionCounts) -> Rates:
    precision_defined = (c.tp + c.fp) > 0
    recall_defined = (c.tp + c.fn) > 0
    return Rates(
        precision=c.tp / (c.tp + c.fp) if precision_defined else 0.0,
        recall=c.tp / (c.tp + c.fn) if recall_defined else 0.0,
        accuracy=(c.tp + c.tn) / c.total,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )


def roc_auc(scores, labels):
    """ROC curve over all distinct thresholds plus the exact AUC.

    Ties in score move the curve diagonally (trapezoid over the tie block),
    which is what makes the area identical to the pair-counting statistic.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError("scores and labels must be 1-D and the same length")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be binary (0/1)")
    n1 = int(np.sum(y == 1))
    n0 = int(y.size - n1)
    if n0 == 0 or n1 == 0:
        raise DataError("ROC needs both classes present")
    order = np.argsort(-s, kind="mergesort")
    s = s[order]
    y = y[order]
    points = [(0.0, 0.0)]
    thresholds = [math.inf]
    tp = fp = 0
    area2 = 0  # twice the un-normalized area, exactly, in ints
    i = 0
    n = s.size
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        dtp = int(np.sum(y[i:j] == 1))
        dfp = (j - i) - dtp
        area2 += dfp * (2 * tp + dtp)
        tp += dtp
        fp += dfp
        points.append((fp / n0, tp / n1))
        thresholds.append(float(s[i]))
        i = j
    return RocCurve(points=points, thresholds=thresholds), area2 / (2 * n0 * n1)


def micro_macro_auc(scores_per_class, labels):
    """One-vs-rest micro and macro AUC for the two-class problem.

    scores_per_class is (class0_scores, class1_scores); micro pools the
    (score, indicator) pairs of both classes, macro averages the per-class
    AUCs unweighted.
    """
    s0, s1 = (np.asarray(v, dtype=np.float64) for v in scores_per_class)
    y = np.asarray(labels)
    if s0.shape != y.shape or s1.shape != y.shape:
        raise DataError("per-class scores must match labels in length")
    _, auc0 = roc_auc(s0, (y == 0).astype(int))
    _, auc1 = roc_auc(s1, (y == 1).astype(int))
    pooled_scores = np.concatenate([s0, s1])
    pooled_truth = np.concatenate([(y == 0).astype(int), (y == 1).astype(int)])
    _, micro = roc_auc(pooled_scores, pooled_truth)
    return micro, (auc0 + auc1) / 2.0

"""Evaluation primitives: confusion-based classification metrics, MAE, rank AUC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_binary_labels, as_float_vector


class MetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    # Set when the corresponding denominator was zero and the value was
    # reported as 0.0 instead of NaN, so report tables stay total.
    precision_undefined: bool = False
    recall_undefined: bool = False


def confusion_counts(preds, labels) -> ConfusionCounts:
    preds = as_binary_labels(preds, "preds")
    labels = as_binary_labels(labels, "labels", length=len(preds))
    if len(preds) == 0:
        raise MetricError("cannot compute a confusion matrix from empty inputs")
    tp = int(np.sum((preds == 1) & (labels == 1)))
    fp = int(np.sum((preds == 1) & (labels == 0)))
    tn = int(np.sum((preds == 0) & (labels == 0)))
    fn = int(np.sum((preds == 0) & (labels == 1)))
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics_from_counts(counts: ConfusionCounts) -> ClassificationMetrics:
    precision_undefined = counts.tp + counts.fp == 0
    recall_undefined = counts.tp + counts.fn == 0
    precision = 0.0 if precision_undefined else counts.tp / (counts.tp + counts.fp)
    recall = 0.0 if recall_undefined else counts.tp / (counts.tp + counts.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    accuracy = (counts.tp + counts.tn) / counts.total
    return ClassificationMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        precision_undefined=precision_undefined,
        recall_undefined=recall_undefined,
    )


def classification_metrics(preds, labels) -> ClassificationMetrics:
    """Precision, recall, F1, accuracy of binary predictions against labels."""
    return metrics_from_counts(confusion_counts(preds, labels))


def mae(preds, targets) -> float:
    preds = as_float_vector(preds, "preds")
    targets = as_float_vector(targets, "targets", length=len(preds))
    if len(preds) == 0:
        raise MetricError("cannot compute MAE of empty inputs")
    return float(np.mean(np.abs(preds - targets)))


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores contribute 1/2 per pair."""
    scores = as_float_vector(scores, "scores")
    labels = as_binary_labels(labels, "labels", length=len(scores))
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC undefined: both classes must be present")
    ranks = _average_ranks(scores)
    pos_rank_sum = float(np.sum(ranks[labels == 1]))
    u_stat = pos_rank_sum - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks

import numpy as np
import pytest
from hypothesis import given, strategies as st

from linkresolve.metrics import (
    ClassificationMetrics,
    ConfusionCounts,
    MetricError,
    auc,
    classification_metrics,
    confusion_counts,
    mae,
    metrics_from_counts,
)


def test_perfect_predictions():
    m = classification_metrics([1, 0, 1, 0], [1, 0, 1, 0])
    assert m.precision == m.recall == m.f1 == m.accuracy == 1.0


def test_published_unit_row():
    # TP=1, FP=0, FN=1, TN=0
    m = metrics_from_counts(ConfusionCounts(tp=1, fp=0, tn=0, fn=1))
    assert m.precision == 1.0
    assert m.recall == 0.5
    assert m.f1 == pytest.approx(0.6667, abs=1e-4)
    assert m.accuracy == 0.5


def test_counts_match_bruteforce(rng):
    preds = rng.integers(0, 2, size=200)
    labels = rng.integers(0, 2, size=200)
    c = confusion_counts(preds, labels)
    tp = sum(1 for p, l in zip(preds, labels) if p == 1 and l == 1)
    fp = sum(1 for p, l in zip(preds, labels) if p == 1 and l == 0)
    tn = sum(1 for p, l in zip(preds, labels) if p == 0 and l == 0)
    fn = sum(1 for p, l in zip(preds, labels) if p == 0 and l == 1)
    assert (c.tp, c.fp, c.tn, c.fn) == (tp, fp, tn, fn)
    assert c.total == 200


def test_zero_denominator_flagged():
    m = classification_metrics([0, 0], [1, 1])
    assert m.precision == 0.0 and m.precision_undefined
    m2 = classification_metrics([0, 0], [0, 0])
    assert m2.recall == 0.0 and m2.recall_undefined


def test_empty_inputs_error():
    with pytest.raises(MetricError):
        classification_metrics([], [])
    with pytest.raises(MetricError):
        mae([], [])


def test_mae_basics(rng):
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    x = rng.normal(size=30)
    assert mae(x + 0.7, x) == pytest.approx(0.7)
    y = rng.normal(size=30)
    expected = sum(abs(a - b) for a, b in zip(x, y)) / 30
    assert mae(x, y) == pytest.approx(expected, abs=1e-12)
    assert mae(x, y) == pytest.approx(mae(y, x))


def _auc_bruteforce(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else (0.5 if p == q else 0.0)
    return total / (len(pos) * len(neg))


def test_auc_separating_and_ties():
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_auc_single_class_error():
    with pytest.raises(MetricError, match="undefined"):
        auc([0.3, 0.4], [1, 1])


def test_auc_matches_pairwise_oracle(rng):
    for _ in range(10):
        n = int(rng.integers(5, 40))
        scores = np.round(rng.normal(size=n), 1)  # rounding forces ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert auc(scores, labels) == pytest.approx(
            _auc_bruteforce(scores, labels), abs=1e-10
        )


@given(
    # coarse grid so a strictly monotone affine map cannot collapse distinct
    # scores through float rounding
    st.lists(st.integers(-100, 100).map(lambda k: k / 2.0), min_size=4, max_size=40),
    st.floats(0.5, 3.0),
    st.floats(-5, 5),
)
def test_auc_monotone_transform_invariance(scores, a, b):
    labels = [i % 2 for i in range(len(scores))]
    transformed = [a * s + b for s in scores]
    assert auc(scores, labels) == pytest.approx(auc(transformed, labels), abs=1e-9)


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_f1_between_precision_and_recall(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    m = metrics_from_counts(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn))
    assert 0.0 <= m.accuracy <= 1.0
    if m.precision > 0 and m.recall > 0:
        assert m.f1 <= max(m.precision, m.recall) + 1e-12
        assert m.f1 >= min(m.precision, m.recall) - 1e-12

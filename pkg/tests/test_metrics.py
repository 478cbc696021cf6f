import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegconn.errors import DataError
from eegconn.metrics import (
    ConfusionCounts,
    confusion,
    micro_macro_auc,
    precision_recall_accuracy,
    roc_auc,
)
from helpers import auc_pairs


class TestConfusion:
    def test_all_positive_correct(self):
        c = confusion([1, 1, 1], [1, 1, 1])
        assert (c.tp, c.fp, c.tn, c.fn) == (3, 0, 0, 0)

    def test_hand_count(self):
        c = confusion([1, 1, 0, 0], [1, 0, 0, 1])
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 1, 1, 1)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            confusion([], [])

    def test_length_mismatch(self):
        with pytest.raises(DataError, match="mismatch"):
            confusion([1, 0], [1])

    def test_non_binary(self):
        with pytest.raises(DataError, match="binary"):
            confusion([1, 2], [1, 0])

    def test_total(self):
        c = confusion([1, 0, 1, 0, 1], [0, 0, 1, 1, 1])
        assert c.total == 5


class TestRates:
    def test_perfect(self):
        r = precision_recall_accuracy(ConfusionCounts(tp=4, fp=0, tn=4, fn=0))
        assert (r.precision, r.recall, r.accuracy) == (1.0, 1.0, 1.0)

    def test_hand_values(self):
        r = precision_recall_accuracy(ConfusionCounts(tp=1, fp=1, tn=1, fn=1))
        assert (r.precision, r.recall, r.accuracy) == (0.5, 0.5, 0.5)

    def test_zero_denominator_flagged(self):
        r = precision_recall_accuracy(ConfusionCounts(tp=0, fp=0, tn=3, fn=1))
        assert r.precision == 0.0
        assert not r.precision_defined
        assert r.recall_defined

    def test_accuracy_identity(self):
        c = ConfusionCounts(tp=3, fp=2, tn=4, fn=1)
        r = precision_recall_accuracy(c)
        assert r.accuracy == (c.tp + c.tn) / c.total


class TestRocAuc:
    def test_perfect_separation(self):
        curve, auc = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert auc == 1.0
        assert curve.points[0] == (0.0, 0.0)
        assert curve.points[-1] == (1.0, 1.0)

    def test_total_tie(self):
        _, auc = roc_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
        assert auc == 0.5

    def test_pair_example(self):
        _, auc = roc_auc([0.9, 0.1, 0.2, 0.8], [1, 1, 0, 0])
        assert auc == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="both classes"):
            roc_auc([0.1, 0.9], [1, 1])

    def test_curve_monotone_and_thresholds(self):
        rng = np.random.default_rng(0)
        scores = rng.random(40)
        labels = rng.integers(0, 2, 40)
        if labels.sum() in (0, 40):
            labels[0] = 1 - labels[0]
        curve, _ = roc_auc(scores, labels)
        fpr = [p[0] for p in curve.points]
        tpr = [p[1] for p in curve.points]
        assert all(a <= b for a, b in zip(fpr, fpr[1:]))
        assert all(a <= b for a, b in zip(tpr, tpr[1:]))
        assert curve.thresholds[0] == math.inf
        assert len(curve.thresholds) == len(curve.points)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        scores = rng.normal(size=30)
        labels = (rng.random(30) < 0.4).astype(int)
        labels[0], labels[1] = 0, 1
        _, a1 = roc_auc(scores, labels)
        _, a2 = roc_auc(np.exp(scores), labels)
        assert a1 == a2

    @given(
        n=st.integers(2, 12),
        data=st.data(),
    )
    @settings(max_examples=300, deadline=None)
    def test_exact_pair_counting_oracle(self, n, data):
        # coarse grid forces plenty of ties
        scores = np.asarray(
            data.draw(st.lists(st.integers(0, 4), min_size=n, max_size=n)),
            dtype=float,
        ) / 4.0
        labels = np.asarray(
            data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        )
        if labels.sum() == 0:
            labels[0] = 1
        if labels.sum() == n:
            labels[0] = 0
        _, auc = roc_auc(scores, labels)
        assert auc == auc_pairs(scores, labels)


class TestMicroMacro:
    def test_softmax_mirror_symmetry(self):
        rng = np.random.default_rng(2)
        p1 = rng.random(50)
        labels = (rng.random(50) < 0.5).astype(int)
        labels[:2] = [0, 1]
        micro, macro = micro_macro_auc((1.0 - p1, p1), labels)
        _, auc1 = roc_auc(p1, labels)
        assert macro == pytest.approx(auc1, abs=1e-15)

    def test_perfect(self):
        p1 = np.array([0.9, 0.8, 0.1, 0.2])
        labels = np.array([1, 1, 0, 0])
        micro, macro = micro_macro_auc((1.0 - p1, p1), labels)
        assert micro == 1.0 and macro == 1.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(3)
        p1 = rng.random(200)
        labels = np.repeat([0, 1], 100)
        micro, macro = micro_macro_auc((1.0 - p1, p1), labels)
        assert abs(micro - 0.5) < 0.1
        assert abs(macro - 0.5) < 0.1

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noduleml.errors import ComputeError, DataError
from noduleml.metrics import (
    ConfusionMatrix,
    auroc,
    confusion,
    f1_from,
    mean_metrics,
    metrics_from_confusion,
    roc_curve,
)


def pairwise_auroc(scores, truth):
    """Brute-force tie-corrected pair statistic, the independent oracle."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=int)
    pos = scores[truth == 1]
    neg = scores[truth == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_perfect_prediction(self):
        cm = confusion([1, 1, 0], [1, 1, 0])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 1, 0, 0)

    def test_total_error(self):
        cm = confusion([0, 0, 1], [1, 1, 0])
        assert cm.tp == 0 and cm.tn == 0
        assert cm.fp == 1 and cm.fn == 2

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([1, 0], [1])

    def test_counts_partition_sample(self):
        rng = np.random.default_rng(3)
        pred = rng.integers(0, 2, 40)
        truth = rng.integers(0, 2, 40)
        cm = confusion(pred, truth)
        assert cm.total == 40


class TestMetricsFromConfusion:
    def test_expert_assessment_matrix(self):
        # matrix totals 1231: one nodule was never assessed, so denominators
        # come from the matrix itself
        cm = ConfusionMatrix(tp=487, fn=331, fp=71, tn=342)
        ms = metrics_from_confusion(cm)
        assert ms.accuracy == pytest.approx(0.6734, abs=5e-4)
        assert ms.sensitivity == pytest.approx(0.5954, abs=5e-4)
        assert ms.specificity == pytest.approx(0.8281, abs=5e-4)
        assert ms.precision == pytest.approx(0.8728, abs=5e-4)
        assert ms.f1 == pytest.approx(0.7078, abs=5e-4)

    def test_f1_from_averaged_parts(self):
        assert f1_from(0.8321, 0.8629) == pytest.approx(0.8472, abs=5e-4)

    def test_zero_denominators_flagged_undefined(self):
        ms = metrics_from_confusion(ConfusionMatrix(tp=0, fn=0, fp=3, tn=7))
        assert ms.sensitivity is None  # tp + fn == 0
        assert ms.precision == 0.0  # tp + fp == 3: defined, just zero
        assert ms.f1 is None  # needs a defined sensitivity
        assert ms.specificity == pytest.approx(0.7)
        assert ms.accuracy == pytest.approx(0.7)

    def test_truly_undefined_precision(self):
        ms = metrics_from_confusion(ConfusionMatrix(tp=0, fn=3, fp=0, tn=7))
        assert ms.precision is None  # nothing predicted positive
        assert ms.sensitivity == 0.0

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            pred = rng.integers(0, 2, n)
            truth = rng.integers(0, 2, n)
            cm = confusion(pred, truth)
            ms = metrics_from_confusion(cm)
            assert ms.accuracy == pytest.approx(np.mean(pred == truth))
            if (truth == 1).any():
                assert ms.sensitivity == pytest.approx(
                    np.mean(pred[truth == 1] == 1))
            if (truth == 0).any():
                assert ms.specificity == pytest.approx(
                    np.mean(pred[truth == 0] == 0))

    def test_accuracy_identity(self):
        # accuracy = sens * prevalence + spec * (1 - prevalence)
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(4, 50))
            pred = rng.integers(0, 2, n)
            truth = np.concatenate([[0, 1], rng.integers(0, 2, n - 2)])
            cm = confusion(pred, truth)
            ms = metrics_from_confusion(cm)
            prev = (cm.tp + cm.fn) / cm.total
            assert ms.accuracy == pytest.approx(
                ms.sensitivity * prev + ms.specificity * (1 - prev), abs=1e-12)


class TestRocCurve:
    def test_perfect_separation(self):
        fpr, tpr = roc_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert list(zip(fpr, tpr)) == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
                                       (0.5, 1.0), (1.0, 1.0)]

    def test_all_scores_equal_single_tie_group(self):
        fpr, tpr = roc_curve([0.3, 0.3, 0.3], [1, 0, 1])
        assert list(zip(fpr, tpr)) == [(0.0, 0.0), (1.0, 1.0)]

    def test_tpr_leads_fpr(self):
        # thresholds enumerated by hand: first step takes the top-scored
        # positive, so TPR reaches 0.5 while FPR is still 0
        fpr, tpr = roc_curve([0.9, 0.6, 0.4, 0.2], [1, 0, 1, 0])
        assert tpr[1] == 0.5 and fpr[1] == 0.0

    def test_single_class_rejected(self):
        with pytest.raises(ComputeError):
            roc_curve([0.1, 0.2], [1, 1])


class TestAuroc:
    def test_perfect(self):
        assert auroc([3.0, 2.0, 1.0], [1, 1, 0]) == 1.0

    def test_all_ties(self):
        assert auroc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_hand_counted(self):
        # 3 of 4 (positive, negative) pairs correctly ordered
        assert auroc([0.9, 0.6, 0.4, 0.2], [1, 0, 1, 0]) == pytest.approx(0.75)

    def test_matches_pairwise_oracle_with_ties(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            n = int(rng.integers(2, 50))
            truth = np.concatenate([[0, 1], rng.integers(0, 2, n - 2)])
            # coarse grid injects plenty of score ties
            scores = rng.integers(0, 5, truth.size) / 4.0
            assert auroc(scores, truth) == pytest.approx(
                pairwise_auroc(scores, truth), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)),
                    min_size=2, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_property_pairwise_equivalence(self, pairs):
        scores = np.array([p[0] for p in pairs], dtype=float)
        truth = np.array([p[1] for p in pairs])
        if truth.min() == truth.max():
            return
        assert auroc(scores, truth) == pytest.approx(
            pairwise_auroc(scores, truth), abs=1e-12)

    def test_invariant_to_monotone_transform(self):
        rng = np.random.default_rng(9)
        scores = rng.normal(size=30)
        truth = np.concatenate([[0, 1], rng.integers(0, 2, 28)])
        base = auroc(scores, truth)
        assert auroc(np.exp(scores), truth) == pytest.approx(base, abs=1e-12)
        assert auroc(3 * scores + 7, truth) == pytest.approx(base, abs=1e-12)

    def test_negation_flips_area_without_ties(self):
        rng = np.random.default_rng(13)
        scores = rng.permutation(40).astype(float)  # distinct scores
        truth = np.concatenate([[0, 1], rng.integers(0, 2, 38)])
        assert auroc(-scores, truth) == pytest.approx(
            1.0 - auroc(scores, truth), abs=1e-12)


class TestMeanMetrics:
    def test_skips_undefined_and_counts(self):
        a = metrics_from_confusion(ConfusionMatrix(tp=1, fn=1, fp=1, tn=1))
        b = metrics_from_confusion(ConfusionMatrix(tp=0, fn=0, fp=3, tn=7))
        mean, skipped = mean_metrics([a, b])
        assert skipped["sensitivity"] == 1
        assert mean.sensitivity == pytest.approx(a.sensitivity)
        assert mean.accuracy == pytest.approx((a.accuracy + b.accuracy) / 2)

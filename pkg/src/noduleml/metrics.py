"""Confusion-matrix statistics, ROC construction and AUROC.

Malignant is the positive class throughout. Metrics with a zero denominator
are reported as None, never silently as 0 or 1; averaging helpers skip None
entries and report how many were skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ComputeError, DataError

METRIC_NAMES = ("accuracy", "auroc", "sensitivity", "specificity", "precision", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def mirrored(self) -> "ConfusionMatrix":
        """Counts after swapping which class is called positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class MetricSet:
    """The five confusion metrics plus optional AUROC; None marks undefined."""

    accuracy: float | None = None
    auroc: float | None = None
    sensitivity: float | None = None
    specificity: float | None = None
    precision: float | None = None
    f1: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def confusion(predicted, truth) -> ConfusionMatrix:
    """Count tp/fp/tn/fn of binary predictions against binary truth."""
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if predicted.shape != truth.shape:
        raise DataError(
            f"prediction/truth length mismatch: {predicted.shape} vs {truth.shape}"
        )
    if predicted.size < 1:
        raise DataError("cannot build a confusion matrix from zero samples")
    tp = int(np.sum((predicted == 1) & (truth == 1)))
    fp = int(np.sum((predicted == 1) & (truth == 0)))
    tn = int(np.sum((predicted == 0) & (truth == 0)))
    fn = int(np.sum((predicted == 0) & (truth == 1)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def metrics_from_confusion(cm: ConfusionMatrix) -> MetricSet:
    """Accuracy, sensitivity, specificity, precision and F1 from counts.

    Denominators come from the matrix itself; any metric whose denominator is
    zero is returned as None while the others are still computed.
    """
    if cm.total < 1:
        raise DataError("confusion matrix is empty")
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    sensitivity = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    if precision is None or sensitivity is None or precision + sensitivity == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    return MetricSet(
        accuracy=accuracy,
        sensitivity=sensitivity,
        specificity=specificity,
        precision=precision,
        f1=f1,
    )


def f1_from(precision: float, sensitivity: float) -> float | None:
    """Harmonic mean of precision and sensitivity."""
    if precision + sensitivity == 0:
        return None
    return 2.0 * precision * sensitivity / (precision + sensitivity)


def _check_two_classes(truth: np.ndarray) -> tuple[int, int]:
    n_pos = int(np.sum(truth == 1))
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ComputeError("ROC/AUROC undefined: truth contains a single class")
    return n_pos, n_neg


def roc_curve(scores, truth) -> tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) points from (0,0) to (1,1), one step per distinct score.

    Equal scores form a single tie group, so ties contribute one diagonal
    segment instead of an arbitrary staircase.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=int)
    if scores.shape != truth.shape:
        raise DataError("scores/truth length mismatch")
    n_pos, n_neg = _check_two_classes(truth)

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truth[order]
    # Close each group of equal scores with a single cumulative point.
    boundary = np.nonzero(np.diff(s))[0]
    cut = np.concatenate([boundary, [s.size - 1]])
    tp_cum = np.cumsum(t)[cut]
    fp_cum = np.cumsum(1 - t)[cut]
    fpr = np.concatenate([[0.0], fp_cum / n_neg])
    tpr = np.concatenate([[0.0], tp_cum / n_pos])
    return fpr, tpr


def auroc(scores, truth) -> float:
    """Trapezoidal area under the ROC curve.

    Equals the tie-corrected pairwise rank statistic
    (#{pos > neg} + 0.5 * #{pos = neg}) / (n_pos * n_neg).
    """
    fpr, tpr = roc_curve(scores, truth)
    return float(np.trapezoid(tpr, fpr))


def mean_metrics(metric_sets: list[MetricSet]) -> tuple[MetricSet, dict[str, int]]:
    """Per-metric mean across MetricSets, skipping undefined entries.

    Returns the mean set and a per-metric count of skipped (None) values.
    """
    means = {}
    skipped = {}
    for name in METRIC_NAMES:
        values = [getattr(ms, name) for ms in metric_sets]
        defined = [v for v in values if v is not None]
        skipped[name] = len(values) - len(defined)
        means[name] = float(np.mean(defined)) if defined else None
    return MetricSet(**means), skipped

"""ROC/AUC and calibration diagnostics for binary scores.

``roc_auc`` sweeps all distinct score thresholds, so the trapezoidal area
equals the Mann-Whitney statistic P(score+ > score-) + P(tie)/2 including
tied scores.  ``calibration_curve`` bins predictions into equal-width bins
on [0, 1], right-inclusive at 1.0.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from revaudit.errors import UndefinedStatisticError


@dataclass
class RocCurve:
    points: list[tuple[float, float]]  # (fpr, tpr), non-decreasing, (0,0) .. (1,1)
    auc: float


def roc_auc(scores, y) -> RocCurve:
    """ROC curve over all distinct thresholds plus its trapezoidal area."""
    pairs = sorted(zip(scores, y), key=lambda sy: -sy[0])
    n_pos = sum(1 for _, label in pairs if label)
    n_neg = len(pairs) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedStatisticError("AUC needs both classes present")

    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(pairs):
        threshold = pairs[i][0]
        while i < len(pairs) and pairs[i][0] == threshold:
            if pairs[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos))

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=points, auc=auc)


@dataclass
class CalibrationBin:
    index: int
    mean_predicted: float
    positive_rate: float
    count: int


@dataclass
class CalibrationCurve:
    bins: list[CalibrationBin]  # occupied bins only, ascending index
    n_bins: int


def calibration_curve(probs, y, n_bins: int = 10) -> CalibrationCurve:
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    edges = [i / n_bins for i in range(n_bins + 1)]
    sums: dict[int, list[float]] = {}
    for p, label in zip(probs, y):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
        idx = min(bisect.bisect_right(edges, p) - 1, n_bins - 1)
        acc = sums.setdefault(idx, [0.0, 0.0, 0])
        acc[0] += p
        acc[1] += 1.0 if label else 0.0
        acc[2] += 1
    bins = [
        CalibrationBin(idx, p_sum / count, pos / count, count)
        for idx, (p_sum, pos, count) in sorted(sums.items())
    ]
    return CalibrationCurve(bins=bins, n_bins=n_bins)

"""Group-fairness disparity measures over scored, labeled, grouped rows.

Three max-pairwise gaps (positive-prediction rate, true-positive rate,
within-group AUC), the two-sample Kolmogorov-Smirnov disparity between
score distributions, and empirical marginal acceptance curves with
normal-approximation confidence bands.

Every measure is a pure function and is invariant under relabeling of the
group alphabet.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field

from revaudit.errors import UndefinedStatisticError
from revaudit.stats.metrics import roc_auc

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
DEFAULT_Z = 1.96


@dataclass
class GroupedOutcome:
    id: str
    score: float   # predicted probability, or a binary label cast to 0.0/1.0
    y: int
    group: str


def _by_group(rows) -> dict[str, list[GroupedOutcome]]:
    groups: dict[str, list[GroupedOutcome]] = {}
    for row in rows:
        groups.setdefault(row.group, []).append(row)
    return groups


def _max_pairwise_gap(values: dict[str, float]) -> float:
    ordered = sorted(values.values())
    return ordered[-1] - ordered[0]


def dp_gap(rows, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Max pairwise difference in positive-prediction rates across groups.

    Predictions are binarized as ``score >= threshold``; passing true
    labels as scores therefore computes the data-level gap.
    """
    groups = _by_group(rows)
    if len(groups) < 2:
        raise UndefinedStatisticError(f"need >= 2 groups, got {len(groups)}")
    rates = {
        group: sum(1 for r in members if r.score >= threshold) / len(members)
        for group, members in groups.items()
    }
    return _max_pairwise_gap(rates)


def eo_gap(rows, threshold: float = DEFAULT_THRESHOLD, both_rates: bool = False) -> float:
    """Max pairwise difference in true-positive rates across groups.

    With ``both_rates`` the maximum additionally ranges over the
    false-positive rates (the two-sided equalized-odds reading).
    """
    groups = _by_group(rows)
    if len(groups) < 2:
        raise UndefinedStatisticError(f"need >= 2 groups, got {len(groups)}")
    tprs: dict[str, float] = {}
    for group, members in groups.items():
        positives = [r for r in members if r.y == 1]
        if not positives:
            raise UndefinedStatisticError(f"group {group!r} has no positive rows; TPR undefined")
        tprs[group] = sum(1 for r in positives if r.score >= threshold) / len(positives)
    gap = _max_pairwise_gap(tprs)
    if both_rates:
        fprs: dict[str, float] = {}
        for group, members in groups.items():
            negatives = [r for r in members if r.y == 0]
            if not negatives:
                raise UndefinedStatisticError(f"group {group!r} has no negative rows; FPR undefined")
            fprs[group] = sum(1 for r in negatives if r.score >= threshold) / len(negatives)
        gap = max(gap, _max_pairwise_gap(fprs))
    return gap


def auc_gap(rows) -> float:
    """Max pairwise difference of within-group AUC on the raw scores."""
    groups = _by_group(rows)
    if len(groups) < 2:
        raise UndefinedStatisticError(f"need >= 2 groups, got {len(groups)}")
    aucs: dict[str, float] = {}
    for group, members in groups.items():
        labels = {r.y for r in members}
        if labels != {0, 1}:
            raise UndefinedStatisticError(f"group {group!r} has a single class; AUC undefined")
        aucs[group] = roc_auc([r.score for r in members], [r.y for r in members]).auc
    return _max_pairwise_gap(aucs)


def cdf_max_disparity(scores_a, scores_b) -> float:
    """Two-sample KS statistic: sup over pooled points of |F_a - F_b|."""
    a = sorted(scores_a)
    b = sorted(scores_b)
    if not a or not b:
        raise UndefinedStatisticError("both samples must be non-empty")
    sup = 0.0
    for t in sorted(set(a) | set(b)):
        fa = bisect.bisect_right(a, t) / len(a)
        fb = bisect.bisect_right(b, t) / len(b)
        sup = max(sup, abs(fa - fb))
    return sup


@dataclass
class MarginalPoint:
    bin_center: float
    group: str
    probability: float
    half_width: float
    count: int


@dataclass
class MarginalCurve:
    points: list[MarginalPoint]
    z: float


def marginal_curve(rows, bin_edges=None, z: float = DEFAULT_Z) -> MarginalCurve:
    """Per-bin, per-group acceptance probability with confidence bands.

    The conditioning variable is the row score (average review rating in
    the pipeline).  Without explicit edges every attainable score value is
    its own bin.  Bands are ``z * sqrt(p(1-p)/n)``; empty bins are omitted.
    """
    if bin_edges is not None and not all(a < b for a, b in zip(bin_edges, bin_edges[1:])):
        raise ValueError("bin_edges must be strictly increasing")

    def center_of(value: float):
        if bin_edges is None:
            return value
        if value < bin_edges[0] or value > bin_edges[-1]:
            return None
        idx = min(bisect.bisect_right(bin_edges, value) - 1, len(bin_edges) - 2)
        return (bin_edges[idx] + bin_edges[idx + 1]) / 2.0

    cells: dict[tuple[float, str], list[int]] = {}
    for row in rows:
        center = center_of(row.score)
        if center is None:
            continue
        acc = cells.setdefault((center, row.group), [0, 0])
        acc[0] += 1 if row.y == 1 else 0
        acc[1] += 1
    points = []
    for (center, group), (accepted, n) in sorted(cells.items()):
        p = accepted / n
        half = z * math.sqrt(p * (1.0 - p) / n)
        points.append(MarginalPoint(center, group, p, half, n))
    return MarginalCurve(points=points, z=z)


@dataclass
class DisparityReport:
    """DP/EO/AUC gaps for one sensitive attribute, with backing group rates."""

    attribute: str
    dp: float | None
    eo: float | None
    auc: float | None
    threshold: float
    group_sizes: dict[str, int] = field(default_factory=dict)
    group_rates: dict[str, dict[str, float]] = field(default_factory=dict)


def disparity_report(
    attribute: str,
    rows,
    threshold: float = DEFAULT_THRESHOLD,
    eo_both_rates: bool = False,
) -> DisparityReport:
    """All three gaps at once; groups lacking a defined conditional are
    dropped from that specific measure with a warning."""
    groups = _by_group(rows)
    if len(groups) < 2:
        raise UndefinedStatisticError(f"attribute {attribute!r}: need >= 2 groups")
    sizes = {group: len(members) for group, members in groups.items()}
    rates: dict[str, dict[str, float]] = {"dp": {}, "eo": {}, "auc": {}}

    dp = dp_gap(rows, threshold)
    for group, members in groups.items():
        rates["dp"][group] = sum(1 for r in members if r.score >= threshold) / len(members)

    def restricted(measure, fn, keep):
        kept_rows = [r for r in rows if r.group in keep]
        dropped = sorted(set(groups) - set(keep))
        if dropped:
            logger.warning("attribute %r: dropping groups %s from %s (undefined conditional)",
                           attribute, dropped, measure)
        if len(keep) < 2:
            logger.warning("attribute %r: %s undefined (fewer than 2 usable groups)", attribute, measure)
            return None
        return fn(kept_rows)

    eo_groups = [g for g, members in groups.items() if any(r.y == 1 for r in members)]
    eo = restricted("eo", lambda rs: eo_gap(rs, threshold, eo_both_rates), eo_groups)
    if eo is not None:
        for group in eo_groups:
            positives = [r for r in groups[group] if r.y == 1]
            rates["eo"][group] = sum(1 for r in positives if r.score >= threshold) / len(positives)

    auc_groups = [g for g, members in groups.items() if {r.y for r in members} == {0, 1}]
    auc = restricted("auc", auc_gap, auc_groups)
    if auc is not None:
        for group in auc_groups:
            members = groups[group]
            rates["auc"][group] = roc_auc([r.score for r in members], [r.y for r in members]).auc

    return DisparityReport(
        attribute=attribute,
        dp=dp,
        eo=eo,
        auc=auc,
        threshold=threshold,
        group_sizes=sizes,
        group_rates=rates,
    )

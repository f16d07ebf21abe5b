import math
import random

import pytest
from scipy.integrate import trapezoid

from oracles import auc_pair_counting
from revaudit.errors import UndefinedStatisticError
from revaudit.stats import calibration_curve, roc_auc


class TestRocAuc:
    def test_pair_counting_example(self):
        # positives {0.9, 0.3} vs negative {0.8}: one win, one loss
        curve = roc_auc([0.9, 0.8, 0.3], [1, 0, 1])
        assert curve.auc == pytest.approx(0.5, abs=1e-12)

    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0

    def test_all_tied_scores(self):
        assert roc_auc([0.4] * 6, [1, 0, 1, 0, 1, 0]).auc == pytest.approx(0.5, abs=1e-12)

    def test_single_class_is_undefined(self):
        with pytest.raises(UndefinedStatisticError):
            roc_auc([0.1, 0.2], [1, 1])

    def test_matches_pair_counting_oracle(self):
        rng = random.Random(13)
        for _ in range(300):
            n = rng.randrange(2, 60)
            scores = [rng.choice([0.1, 0.25, 0.5, 0.5, 0.75, rng.random()]) for _ in range(n)]
            labels = [rng.randrange(2) for _ in range(n)]
            if len(set(labels)) < 2:
                labels[0] = 1 - labels[0]
            assert roc_auc(scores, labels).auc == pytest.approx(
                auc_pair_counting(scores, labels), abs=1e-12)

    def test_invariant_under_monotone_transforms(self):
        rng = random.Random(17)
        scores = [rng.random() for _ in range(40)]
        labels = [rng.randrange(2) for _ in range(40)]
        labels[0], labels[1] = 0, 1
        base = roc_auc(scores, labels).auc
        transforms = [
            lambda s: 3.0 * s + 1.0,
            math.exp,
            lambda s: s ** 3 + 0.5 * s,
            lambda s: math.atan(5 * s),
        ]
        for transform in transforms:
            assert roc_auc([transform(s) for s in scores], labels).auc == pytest.approx(base, abs=1e-12)

    def test_curve_shape_and_trapezoid_identity(self):
        rng = random.Random(19)
        scores = [rng.choice([0.2, 0.4, 0.4, 0.8]) for _ in range(30)]
        labels = [rng.randrange(2) for _ in range(30)]
        labels[0], labels[1] = 0, 1
        curve = roc_auc(scores, labels)
        xs = [p[0] for p in curve.points]
        ys = [p[1] for p in curve.points]
        assert curve.points[0] == (0.0, 0.0)
        assert curve.points[-1] == (1.0, 1.0)
        assert all(a <= b for a, b in zip(xs, xs[1:]))
        assert all(a <= b for a, b in zip(ys, ys[1:]))
        assert curve.auc == pytest.approx(trapezoid(ys, xs), abs=1e-12)


class TestCalibration:
    def test_single_bin_at_half(self):
        curve = calibration_curve([0.5] * 10, [1, 0] * 5)
        assert len(curve.bins) == 1
        only = curve.bins[0]
        assert only.mean_predicted == pytest.approx(0.5)
        assert only.positive_rate == pytest.approx(0.5)
        assert only.count == 10

    def test_extreme_bins(self):
        curve = calibration_curve([0.05, 0.95], [0, 1], n_bins=10)
        assert [b.index for b in curve.bins] == [0, 9]
        assert curve.bins[0].positive_rate == 0.0
        assert curve.bins[1].positive_rate == 1.0

    def test_right_edge_inclusive(self):
        curve = calibration_curve([1.0, 0.0], [1, 0], n_bins=10)
        assert [b.index for b in curve.bins] == [0, 9]

    def test_counts_sum_and_means_inside_boundaries(self):
        rng = random.Random(23)
        probs = [rng.random() for _ in range(500)]
        labels = [rng.randrange(2) for _ in range(500)]
        curve = calibration_curve(probs, labels, n_bins=7)
        assert sum(b.count for b in curve.bins) == 500
        for b in curve.bins:
            lo, hi = b.index / 7, (b.index + 1) / 7
            assert lo <= b.mean_predicted <= hi

    def test_calibrated_sampling_oracle(self):
        # draw labels from the stated probabilities; empirical rates converge
        rng = random.Random(29)
        probs, labels = [], []
        for _ in range(100_000):
            p = rng.choice([0.05, 0.25, 0.45, 0.65, 0.85])
            probs.append(p)
            labels.append(1 if rng.random() < p else 0)
        curve = calibration_curve(probs, labels, n_bins=10)
        for b in curve.bins:
            assert abs(b.mean_predicted - b.positive_rate) < 0.02

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            calibration_curve([1.2], [1])

    def test_rejects_bad_bin_count(self):
        with pytest.raises(ValueError):
            calibration_curve([0.5], [1], n_bins=0)

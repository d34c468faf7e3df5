import math

import numpy as np
import pytest

from app.dataset import Dataset, DatasetError
from app.pooled import candidate_thresholds, pooled_fit, roc_points, youden_at_threshold


def _two_class(cases, controls):
    return Dataset.from_arrays(list(cases) + list(controls), [1] * len(cases) + [-1] * len(controls))


def _brute_force(d):
    """Best objective over every candidate threshold, computed directly."""

    pos, neg = d.x[d.y == 1], d.x[d.y == -1]
    best = -math.inf
    for c in candidate_thresholds(d.x):
        sign_pos = np.where(pos - c >= 0, 1.0, -1.0)
        sign_neg = np.where(neg - c >= 0, 1.0, -1.0)
        value = np.mean(1 + sign_pos) + np.mean(1 - sign_neg)
        best = max(best, value)
    return best


def test_perfect_separation():
    estimate = pooled_fit(_two_class([2.0], [0.0]))
    assert estimate.cut == 1.0
    assert estimate.youden == 1.0
    assert (0.0, 1.0) in roc_points(_two_class([2.0], [0.0]))


def test_complete_overlap():
    assert pooled_fit(_two_class([0.0, 1.0], [0.0, 1.0])).youden == 0.0


def test_tie_break_picks_lowest_interval():
    d = _two_class([1, 3, 4], [0, 2, 5])
    estimate = pooled_fit(d)
    assert math.isclose(estimate.youden, 1.0 / 3.0)
    assert estimate.cut == 0.5
    assert math.isclose(estimate.youden, estimate.objective / 2.0 - 1.0)
    points = roc_points(d)
    assert any(math.isclose(fpr, 1 / 3) and math.isclose(tpr, 2 / 3) for fpr, tpr in points)


def test_roc_includes_corners_and_diagonal_when_uninformative():
    d = _two_class([0.5, 1.5, 2.5], [0.5, 1.5, 2.5])
    points = roc_points(d)
    assert points[0] == (1.0, 1.0)
    assert points[-1] == (0.0, 0.0)
    assert all(math.isclose(tpr, fpr) for fpr, tpr in points)


def test_matches_brute_force_on_random_data():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n_pos, n_neg = rng.integers(1, 15, size=2)
        cases = rng.integers(0, 8, size=n_pos).astype(float)
        controls = rng.integers(0, 8, size=n_neg).astype(float)
        d = _two_class(cases, controls)
        estimate = pooled_fit(d)
        assert estimate.objective == _brute_force(d)
        assert -1.0 <= estimate.youden <= 1.0
        best_roc = max(tpr - fpr for fpr, tpr in roc_points(d))
        assert math.isclose(estimate.youden, best_roc, abs_tol=1e-12)


def test_objective_invariant_to_increasing_transform():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=25)
        y = np.where(rng.random(25) < 0.5, 1, -1)
        y[:2] = [1, -1]
        d = Dataset.from_arrays(x, y)
        mapped = Dataset.from_arrays(np.exp(x) + 3.0 * x, y)
        assert pooled_fit(d).objective == pooled_fit(mapped).objective


def test_youden_at_threshold_uses_sign_zero_positive():
    d = _two_class([1.0], [0.0])
    assert youden_at_threshold(d, 1.0) == 1.0
    assert youden_at_threshold(d, 0.0) == 0.0


def test_empty_class_rejected():
    with pytest.raises(DatasetError):
        pooled_fit(Dataset.from_arrays([1.0, 2.0], [1, 1]))

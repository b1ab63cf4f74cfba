import numpy as np
import pytest

from tripforge.metrics import classification_metrics, regression_metrics


def test_perfect_classification():
    r = classification_metrics([1, 0, 1, 1], [1, 0, 1, 1])
    assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)


def test_hand_counted_confusion():
    r = classification_metrics([1, 0, 1, 0], [1, 1, 0, 0])
    assert (r.tp, r.fp, r.tn, r.fn) == (1, 1, 1, 1)
    for v in (r.accuracy, r.precision, r.recall, r.f1):
        assert abs(v - 0.5) <= 1e-12


def test_asymmetric_counts():
    # tp=2, fp=1, tn=3, fn=2
    r = classification_metrics([1, 1, 1, 0, 0, 0, 0, 0], [1, 1, 0, 1, 1, 0, 0, 0])
    assert (r.tp, r.fp, r.tn, r.fn) == (2, 1, 3, 2)
    assert abs(r.accuracy - 5 / 8) <= 1e-12
    assert abs(r.precision - 2 / 3) <= 1e-12
    assert abs(r.recall - 1 / 2) <= 1e-12
    assert abs(r.f1 - 4 / 7) <= 1e-12
    assert r.tp + r.fp + r.tn + r.fn == 8


def test_undefined_ratios_are_null():
    r = classification_metrics([0, 0, 0], [1, 0, 0])
    assert r.precision is None and r.f1 is None
    assert r.recall == 0.0
    r = classification_metrics([1, 0], [0, 0])
    assert r.recall is None and r.precision == 0.0 and r.f1 is None
    r = classification_metrics([1, 0], [0, 1])
    assert r.precision == 0.0 and r.recall == 0.0 and r.f1 is None


def test_classification_errors():
    with pytest.raises(ValueError):
        classification_metrics([1, 0], [1])
    with pytest.raises(ValueError):
        classification_metrics([], [])


def test_regression_examples():
    r = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r.mae == 0.0 and r.r2 == 1.0
    r = regression_metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    assert abs(r.mae - 2 / 3) <= 1e-12
    assert abs(r.r2 - 0.0) <= 1e-12
    # residuals (0.5, -1, 0, 2.5); SSE = 7.5; SST over truth (1, 3, 2, 6) = 14
    r = regression_metrics([1.5, 2.0, 2.0, 8.5], [1.0, 3.0, 2.0, 6.0])
    assert abs(r.mae - 1.0) <= 1e-12
    assert abs(r.r2 - (1 - 7.5 / 14)) <= 1e-12


def test_regression_edge_cases():
    assert regression_metrics([1.0, 2.0], [3.0, 3.0]).r2 is None
    assert regression_metrics([1.0], [2.0]).r2 is None
    assert regression_metrics([5.0, 0.0], [0.0, 1.0]).r2 < 0
    with pytest.raises(ValueError):
        regression_metrics([1.0, 2.0], [1.0])


def test_permutation_invariance():
    rng = np.random.default_rng(0)
    p, t = rng.integers(0, 2, 50), rng.integers(0, 2, 50)
    idx = rng.permutation(50)
    assert classification_metrics(p, t) == classification_metrics(p[idx], t[idx])
    yp, yt = rng.normal(size=50), rng.normal(size=50)
    a, b = regression_metrics(yp, yt), regression_metrics(yp[idx], yt[idx])
    assert a.mae == pytest.approx(b.mae, rel=1e-12) and a.r2 == pytest.approx(b.r2, rel=1e-12)

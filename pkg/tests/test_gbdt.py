import datetime as dt

import numpy as np
import pytest

from tripforge import gbdt
from tripforge.features import FeatureMask, feature_matrix
from tripforge.gbdt import EPS, GbdtConfig, GbdtModel, Tree, TreeNode, fit, rank_destinations, sigmoid
from tripforge.model import Gender, Station, StationRegistry, UserCategory

STUMP = GbdtConfig(n_trees=1, learning_rate=1.0, max_depth=1, min_samples_leaf=1, subsample=1.0)


def brute_force_stump(x, y):
    """Best (threshold, left value, right value) by enumerating every midpoint; None if no split."""
    p0 = np.clip(y.mean(), EPS, 1 - EPS)
    r = y - p0
    h = p0 * (1 - p0)
    vals = np.unique(x)
    best = None
    for a, b in zip(vals[:-1], vals[1:]):
        t = (a + b) / 2
        left, right = r[x <= t], r[x > t]
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if best is None or sse < best[0] - 1e-9 * max(1.0, abs(best[0])):
            best = (sse, t, left.sum() / (h * len(left)), right.sum() / (h * len(right)))
    total = ((r - r.mean()) ** 2).sum()
    if best is None or total - best[0] <= 1e-12:
        return None
    return best[1:]


def test_stump_matches_brute_force():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(150):
        n = int(rng.integers(2, 51))
        # a coarse grid makes repeated values common
        x = rng.integers(0, int(rng.integers(2, 20)), n).astype(float) / 4
        y = (rng.random(n) < rng.uniform(0.2, 0.8)).astype(float)
        if y.min() == y.max():
            continue
        model = fit(x[:, None], y, STUMP)
        tree = model.trees[0]
        expected = brute_force_stump(x, y)
        if expected is None:
            assert len(tree) == 1
            continue
        t, lv, rv = expected
        assert tree.feature[0] == 0
        assert tree.threshold[0] == t
        np.testing.assert_allclose(tree.value[[tree.left[0], tree.right[0]]], [lv, rv], rtol=1e-12)
        checked += 1
    assert checked >= 100


def test_separable_stump():
    x = np.array([-3.0, -2.0, -0.5, 0.0, 1.0, 2.5])
    y = (x >= 0).astype(float)
    model = fit(x[:, None], y, STUMP)
    assert -0.5 < model.trees[0].threshold[0] < 0.0
    assert np.all(model.classify(x[:, None]) == y)


def test_newton_leaf_hand_case():
    # every row at score 0 with label 1: sum(1 - 0.5) / sum(0.25) = 2
    X = np.zeros((4, 1))
    y = np.ones(4)
    tree = gbdt._grow_tree(X, [np.arange(4)], y - 0.5, np.full(4, 0.25), np.ones(4, bool), STUMP, None)
    assert len(tree) == 1 and tree.value[0] == 2.0


def test_base_score():
    assert fit(np.zeros((4, 1)), np.array([0, 1, 0, 1.0]), GbdtConfig(n_trees=0)).base_score == 0.0
    model = fit(np.arange(6.0)[:, None], np.ones(6), GbdtConfig(n_trees=3, min_samples_leaf=1))
    assert model.base_score == pytest.approx(np.log((1 - EPS) / EPS))
    assert np.all(np.abs(model.predict_proba(np.array([[-5.0], [0.0], [99.0]])) - (1 - EPS)) < 1e-12)


def test_deviance_non_increasing():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 4))
    y = ((X[:, 0] + 0.5 * X[:, 1] ** 2 + rng.normal(scale=0.7, size=400)) > 0.3).astype(float)
    model = fit(X, y, GbdtConfig(n_trees=40, max_depth=3, min_samples_leaf=5, subsample=1.0))
    dev = np.array(model.train_deviance)
    assert len(dev) == 41
    assert np.all(np.diff(dev) <= 1e-12)
    assert dev[-1] < dev[0]


def test_sigmoid_and_clamp():
    assert sigmoid(1.0) == pytest.approx(0.7311, abs=1e-4)
    assert sigmoid(0.0) == 0.5
    assert np.isfinite(sigmoid(np.array([-1000.0, 1000.0]))).all()
    stump = Tree([0, -1, -1], [0.0, 0, 0], [1, -1, -1], [2, -1, -1], [0, -1.0, 1.0])
    cfg = GbdtConfig(n_trees=1, learning_rate=0.5)
    m = GbdtModel(cfg, 0.0, (stump,), 1)
    assert m.predict_score(np.array([0.7])) == 0.5
    assert m.predict_score(np.array([-0.7])) == -0.5
    assert GbdtModel(cfg, 0.0, (), 1).predict_proba(np.array([3.0])) == 0.5
    big = GbdtModel(GbdtConfig(learning_rate=1.0), 1e6, (), 1)
    assert big.predict_proba(np.array([0.0])) == 1 - EPS


def test_hand_traced_three_tree_model():
    doc = {
        "config": {"n_trees": 3, "learning_rate": 0.1, "max_depth": 2, "min_samples_leaf": 1,
                   "subsample": 1.0, "seed": 0},
        "base_score": 0.25,
        "n_features": 2,
        "trees": [
            {"feature": 0, "threshold": 1.5,
             "left": {"value": -1.0},
             "right": {"feature": 1, "threshold": 0.0, "left": {"value": 2.0}, "right": {"value": 3.0}}},
            {"feature": 1, "threshold": 5.0, "left": {"value": 0.5}, "right": {"value": -0.5}},
            {"value": 4.0},
        ],
    }
    model = GbdtModel.from_dict(doc)
    # x = (2, -1): tree 1 right then left -> 2.0; tree 2 left -> 0.5; tree 3 -> 4.0
    assert model.predict_score(np.array([2.0, -1.0])) == pytest.approx(0.25 + 0.1 * (2.0 + 0.5 + 4.0), abs=1e-15)
    # x = (1.5, 9): boundary goes left -> -1.0; 9 > 5 -> -0.5; 4.0
    assert model.predict_score(np.array([1.5, 9.0])) == pytest.approx(0.25 + 0.1 * 2.5, abs=1e-15)
    root = TreeNode.from_dict(doc["trees"][0])
    assert root.evaluate([2.0, 1.0]) == 3.0
    assert model.to_dict()["trees"] == doc["trees"]


def test_serialization_and_determinism():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 3))
    y = (X[:, 0] > rng.normal(size=300)).astype(float)
    cfg = GbdtConfig(n_trees=15, max_depth=3, min_samples_leaf=5, subsample=0.7, seed=9)
    a = fit(X, y, cfg)
    b = fit(X, y, cfg, n_threads=1)
    assert a.to_json() == b.to_json()
    assert fit(X, y, GbdtConfig(**{**cfg.__dict__, "seed": 10})).to_json() != a.to_json()
    back = GbdtModel.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    np.testing.assert_array_equal(back.predict_score(X), a.predict_score(X))


def test_classify_threshold():
    m = GbdtModel(GbdtConfig(learning_rate=1.0), 0.0, (), 1)
    assert m.classify(np.array([0.0]), 0.5) == 1
    assert m.classify(np.array([0.0]), 0.51) == 0
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 2))
    y = (X.sum(axis=1) > 0).astype(float)
    model = fit(X, y, GbdtConfig(n_trees=10, max_depth=2, min_samples_leaf=3))
    counts = [int(model.classify(X, t).sum()) for t in np.linspace(0, 1, 41)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_fit_errors():
    with pytest.raises(ValueError):
        fit(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        fit(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(ValueError):
        fit(np.zeros((2, 1)), np.array([0.0, 2.0]))
    with pytest.raises(ValueError):
        GbdtConfig(subsample=0.0)
    model = fit(np.zeros((2, 2)), np.array([0.0, 1.0]), GbdtConfig(n_trees=1))
    with pytest.raises(ValueError):
        model.predict_score(np.zeros((1, 3)))


def test_tree_round_trip():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(200, 3))
    y = (X[:, 2] > 0).astype(float)
    model = fit(X, y, GbdtConfig(n_trees=3, max_depth=4, min_samples_leaf=2))
    for t in model.trees:
        again = Tree.from_node(t.to_node())
        assert again.to_node() == t.to_node()
        assert Tree.from_node(again.to_node()) == again
        root = t.to_node()
        np.testing.assert_array_equal(t.predict(X), [root.evaluate(x) for x in X])


@pytest.fixture
def ring():
    return StationRegistry([Station(i, f"s{i}", 41.85 + 0.01 * i, -87.65 + 0.005 * i) for i in range(1, 9)])


def test_rank_destinations(ring):
    rng = np.random.default_rng(0)
    n = 400
    X = feature_matrix(rng.integers(0, 2, n), np.ones(n, int), np.full(n, 1980),
                       np.full(n, np.datetime64("2014-06-01T08:00", "s")),
                       rng.choice(ring.ids, n), rng.choice(ring.ids, n), ring)
    y = (X[:, 7] > 4).astype(float)
    model = fit(X, y, GbdtConfig(n_trees=5, max_depth=2, min_samples_leaf=5))
    user = UserCategory.subscriber(Gender.MALE, 1980)
    start = dt.datetime(2014, 6, 1, 8, 0)
    ranked = rank_destinations(model, user, start, 3, ring)
    assert len(ranked) == len(ring)
    assert sorted(s for s, _ in ranked) == ring.ids.tolist()
    probs = [p for _, p in ranked]
    assert probs == sorted(probs, reverse=True)
    for (a, pa), (b, pb) in zip(ranked, ranked[1:]):
        if pa == pb:
            assert a < b
    brute = {}
    for d in ring.ids:
        x = feature_matrix([1], [1], [1980], np.array([np.datetime64(start, "s")]), [3], [d], ring)
        brute[int(d)] = float(model.predict_proba(x)[0])
    best = max(brute.values())
    assert ranked[0] == (min(d for d, p in brute.items() if p == best), best)


def test_rank_single_station_and_mask():
    reg = StationRegistry([Station(4, "only", 41.9, -87.6)])
    model = fit(np.array([[0.0, 1, 2], [1, 2, 3]]), np.array([0.0, 1.0]), GbdtConfig(n_trees=1))
    out = rank_destinations(model, UserCategory.customer(), dt.datetime(2014, 1, 1), 4, reg, FeatureMask.TIME)
    assert len(out) == 1 and out[0][0] == 4
    with pytest.raises(KeyError):
        rank_destinations(model, UserCategory.customer(), dt.datetime(2014, 1, 1), 5, reg, FeatureMask.TIME)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("TRIPFORGE_THREADS", "1")
    assert gbdt.default_threads() == 1


def brute_force_multi(X, r, min_leaf):
    """Best (feature, threshold) over all features and midpoints by squared error; lowest feature wins ties."""
    best = None
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            t = (a + b) / 2
            left, right = r[X[:, f] <= t], r[X[:, f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            if best is None or sse < best[0] - 1e-9 * max(1.0, best[0]):
                best = (sse, f, t)
    return best


def test_root_split_over_several_features():
    rng = np.random.default_rng(77)
    cfg = GbdtConfig(n_trees=1, learning_rate=1.0, max_depth=1, min_samples_leaf=3, subsample=1.0)
    for _ in range(60):
        n, d = int(rng.integers(10, 60)), int(rng.integers(2, 6))
        X = rng.integers(0, 12, (n, d)).astype(float)
        y = (rng.random(n) < 1 / (1 + np.exp(-(X[:, rng.integers(d)] - 6)))).astype(float)
        if y.min() == y.max():
            continue
        best = brute_force_multi(X, y - y.mean(), 3)
        tree = fit(X, y, cfg).trees[0]
        if best is None:
            assert len(tree) == 1
            continue
        assert (tree.feature[0], tree.threshold[0]) == (best[1], best[2])


def test_best_feature_wins_regardless_of_position():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(300, 4))
    y = (X[:, 3] > 0).astype(float)
    for perm in ([0, 1, 2, 3], [3, 0, 1, 2], [1, 3, 0, 2]):
        tree = fit(X[:, perm], y, STUMP).trees[0]
        assert perm[tree.feature[0]] == 3

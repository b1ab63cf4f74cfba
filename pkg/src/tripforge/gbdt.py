"""Stochastic gradient tree boosting for binary labels with log-likelihood loss.

Each round fits a least-squares regression tree to the residuals
``y - sigmoid(F)`` on a row subsample, replaces every leaf's mean with one
Newton step ``sum(r) / sum(p (1 - p))`` over the leaf's rows, and adds the
tree to ``F`` scaled by the learning rate.

Split search is exact: every midpoint between consecutive distinct values
of every feature is scored. Rows are presorted once per feature and trees
grow level by level, so one level costs a stable integer sort per feature.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

EPS = 1e-7
# Gains this close (relative) count as tied; ties go to the lowest feature, then the lowest threshold.
TIE_RTOL = 1e-9
# Smallest squared-error reduction worth a split; below it the difference is rounding noise.
MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GbdtConfig:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: int = 5
    min_samples_leaf: int = 20
    subsample: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError(f"n_trees must be >= 0, got {self.n_trees}")
        if not 0 < self.learning_rate <= 1:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 1 <= self.max_depth <= 14:
            raise ValueError(f"max_depth must be in 1..14, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not 0 < self.subsample <= 1:
            raise ValueError(f"subsample must be in (0, 1], got {self.subsample}")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature_index, threshold, left, right) or leaf (value).

    Rows with ``x[feature_index] <= threshold`` go left.
    """

    feature_index: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {"feature": self.feature_index, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "value" in d:
            return cls(value=float(d["value"]))
        return cls(int(d["feature"]), float(d["threshold"]), cls.from_dict(d["left"]), cls.from_dict(d["right"]))

    def evaluate(self, x) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node.value


class Tree:
    """Array form of a binary tree; ``feature[i] == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        for a in (self.feature, self.threshold, self.left, self.right, self.value):
            a.setflags(write=False)

    def __len__(self):
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = len(X)
        idx = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        while True:
            f = self.feature[idx]
            internal = f >= 0
            if not internal.any():
                return self.value[idx]
            x = X[rows, np.where(internal, f, 0)]
            nxt = np.where(x <= self.threshold[idx], self.left[idx], self.right[idx])
            idx = np.where(internal, nxt, idx)

    def to_node(self, i: int = 0) -> TreeNode:
        if self.feature[i] < 0:
            return TreeNode(value=float(self.value[i]))
        return TreeNode(int(self.feature[i]), float(self.threshold[i]),
                        self.to_node(int(self.left[i])), self.to_node(int(self.right[i])))

    @classmethod
    def from_node(cls, root: TreeNode) -> "Tree":
        feature, threshold, left, right, value = [], [], [], [], []

        def visit(node):
            i = len(feature)
            feature.append(-1 if node.is_leaf else node.feature_index)
            threshold.append(0.0 if node.is_leaf else node.threshold)
            value.append(node.value if node.is_leaf else 0.0)
            left.append(-1)
            right.append(-1)
            if not node.is_leaf:
                left[i] = visit(node.left)
                right[i] = visit(node.right)
            return i

        visit(root)
        return cls(feature, threshold, left, right, value)

    def __eq__(self, other):
        return isinstance(other, Tree) and all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("feature", "threshold", "left", "right", "value")
        )


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def binomial_deviance(y, score) -> float:
    p = np.clip(sigmoid(score), EPS, 1 - EPS)
    y = np.asarray(y, dtype=float)
    return float(-2.0 * np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def base_log_odds(y) -> float:
    p = float(np.mean(y))
    bound = math.log((1 - EPS) / EPS)
    if p <= 0:
        return -bound
    if p >= 1:
        return bound
    return math.log(p / (1 - p))


@dataclass(frozen=True, eq=False)
class GbdtModel:
    config: GbdtConfig
    base_score: float
    trees: tuple
    n_features: int
    feature_names: tuple = ()
    train_deviance: tuple = field(default=(), repr=False)

    @property
    def learning_rate(self) -> float:
        return self.config.learning_rate

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = X.reshape(1, -1) if single else X
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got shape {np.shape(X)}")
        return X, single

    def predict_score(self, X):
        """Log-odds: base score plus the learning rate times the summed tree outputs."""
        X, single = self._check(X)
        total = np.zeros(len(X))
        for t in self.trees:
            total += t.predict(X)
        s = self.base_score + self.learning_rate * total
        return float(s[0]) if single else s

    def predict_proba(self, X):
        s = self.predict_score(X)
        p = np.clip(sigmoid(s), EPS, 1 - EPS)
        return float(p) if np.ndim(s) == 0 else p

    def classify(self, X, threshold: float = 0.5):
        p = self.predict_proba(X)
        out = (np.asarray(p) >= threshold).astype(np.int8)
        return int(out) if np.ndim(p) == 0 else out

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "base_score": self.base_score,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "trees": [t.to_node().to_dict() for t in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtModel":
        return cls(
            config=GbdtConfig(**d["config"]),
            base_score=float(d["base_score"]),
            trees=tuple(Tree.from_node(TreeNode.from_dict(t)) for t in d["trees"]),
            n_features=int(d["n_features"]),
            feature_names=tuple(d.get("feature_names", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> "GbdtModel":
        return cls.from_dict(json.loads(text))


def _tied(gain, best):
    return gain >= best - TIE_RTOL * np.maximum(1.0, np.abs(best))


def _best_splits(f, X, order, slot, n_slots, resid, min_leaf):
    """Best split of every frontier node on feature ``f``: (gain, threshold), gain -inf if none."""
    gain_out = np.full(n_slots, -np.inf)
    thr_out = np.zeros(n_slots)
    o = order[f]
    s = slot[o]
    keep = s >= 0
    o, s = o[keep], s[keep]
    if not len(o):
        return gain_out, thr_out
    k = np.argsort(s, kind="stable")
    o, s = o[k], s[k]
    v = X[o, f]
    r = resid[o]
    cnt = np.bincount(s, minlength=n_slots)
    ends = np.cumsum(cnt)
    starts = ends - cnt
    tot = np.bincount(s, weights=r, minlength=n_slots)
    cs = np.cumsum(r)
    base = np.where(starts > 0, cs[np.maximum(starts - 1, 0)], 0.0)
    left_sum = cs - base[s]
    left_n = np.arange(len(o)) - starts[s] + 1
    right_n = cnt[s] - left_n
    right_sum = tot[s] - left_sum
    valid = (left_n >= min_leaf) & (right_n >= min_leaf)
    valid[:-1] &= (v[1:] > v[:-1]) & (s[1:] == s[:-1])
    valid[-1] = False
    if not valid.any():
        return gain_out, thr_out
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = left_sum ** 2 / left_n + right_sum ** 2 / right_n - (tot ** 2 / np.maximum(cnt, 1))[s]
    gain = np.where(valid, gain, -np.inf)
    nonempty = np.flatnonzero(cnt)
    seg_max = np.full(n_slots, -np.inf)
    seg_max[nonempty] = np.maximum.reduceat(gain, starts[nonempty])
    cand = np.flatnonzero(valid & _tied(gain, seg_max[s]))
    slots, first = np.unique(s[cand], return_index=True)
    pos = cand[first]
    thr = (v[pos] + v[pos + 1]) / 2.0
    thr = np.where(thr < v[pos + 1], thr, v[pos])
    gain_out[slots] = gain[pos]
    thr_out[slots] = thr
    return gain_out, thr_out


def _grow_tree(X, order, resid, hess, in_sample, cfg: GbdtConfig, pool) -> Tree:
    n, d = X.shape
    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    node_of = np.where(in_sample, 0, -1).astype(np.int64)
    frontier = [0]
    for _ in range(cfg.max_depth):
        m = len(frontier)
        lut = np.full(len(feature) + 1, -1, dtype=np.int16)  # last entry absorbs node_of == -1
        lut[frontier] = np.arange(m)
        slot = lut[node_of]

        def search(f):
            return _best_splits(f, X, order, slot, m, resid, cfg.min_samples_leaf)

        results = list(pool.map(search, range(d))) if pool is not None else [search(f) for f in range(d)]
        best_gain = np.zeros(m)
        best_f = np.full(m, -1)
        best_thr = np.zeros(m)
        for f, (gain, thr) in enumerate(results):
            # a later feature must beat the incumbent by more than the tie tolerance
            floor = np.where(best_f >= 0, best_gain + TIE_RTOL * np.maximum(1.0, np.abs(best_gain)), MIN_GAIN)
            better = gain > floor
            best_gain = np.where(better, gain, best_gain)
            best_f = np.where(better, f, best_f)
            best_thr = np.where(better, thr, best_thr)

        split_slots = np.flatnonzero(best_f >= 0)
        if not len(split_slots):
            break
        child_of = np.full((m, 2), -1, dtype=np.int64)
        new_frontier = []
        for i in split_slots:
            node = frontier[i]
            feature[node], threshold[node] = int(best_f[i]), float(best_thr[i])
            for side in (0, 1):
                child_of[i, side] = len(feature)
                new_frontier.append(len(feature))
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
            left[node], right[node] = int(child_of[i, 0]), int(child_of[i, 1])
        rows = np.flatnonzero(slot >= 0)
        rows = rows[best_f[slot[rows]] >= 0]
        rs = slot[rows]
        go_right = X[rows, best_f[rs]] > best_thr[rs]
        node_of[rows] = child_of[rs, go_right.astype(np.int64)]
        frontier = new_frontier

    n_nodes = len(feature)
    num = np.bincount(node_of[in_sample], weights=resid[in_sample], minlength=n_nodes)
    den = np.bincount(node_of[in_sample], weights=hess[in_sample], minlength=n_nodes)
    value = np.divide(num, den, out=np.zeros(n_nodes), where=den > 0)
    value[np.asarray(feature) >= 0] = 0.0
    return Tree(feature, threshold, left, right, value)


def default_threads() -> int:
    cap = os.environ.get("TRIPFORGE_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def fit(X, y, config: GbdtConfig = GbdtConfig(), feature_names=(), n_threads: Optional[int] = None) -> GbdtModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError(f"training features must be a non-empty 2-D array, got shape {X.shape}")
    if len(y) != len(X):
        raise ValueError(f"{len(X)} feature rows but {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    cfg = config
    n, d = X.shape
    rng = np.random.default_rng(cfg.seed)
    order = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    base = base_log_odds(y)
    F = np.full(n, base)
    deviance = [binomial_deviance(y, F)]
    trees = []
    n_sample = max(1, int(round(cfg.subsample * n)))
    threads = n_threads if n_threads is not None else default_threads()
    pool = ThreadPoolExecutor(threads) if threads > 1 and d > 1 else None
    try:
        for _ in range(cfg.n_trees):
            p = sigmoid(F)
            resid = y - p
            hess = p * (1 - p)
            in_sample = np.zeros(n, bool)
            if n_sample < n:
                in_sample[rng.choice(n, n_sample, replace=False)] = True
            else:
                in_sample[:] = True
            tree = _grow_tree(X, order, resid, hess, in_sample, cfg, pool)
            trees.append(tree)
            F = F + cfg.learning_rate * tree.predict(X)
            deviance.append(binomial_deviance(y, F))
    finally:
        if pool is not None:
            pool.shutdown()
    return GbdtModel(cfg, base, tuple(trees), d, tuple(feature_names), tuple(deviance))


def rank_destinations(model: GbdtModel, user, start, origin: int, registry, mask=None) -> list[tuple[int, float]]:
    """Every station as a candidate destination, most likely first (ties by ascending id)."""
    from .features import FeatureMask, feature_matrix

    mask = FeatureMask(mask) if mask is not None else FeatureMask.ALL
    if origin not in registry:
        raise KeyError(f"unknown origin station {origin}")
    n = len(registry)
    start64 = np.datetime64(start, "s")
    X = feature_matrix(
        np.full(n, int(user.kind)), np.full(n, int(user.gender)), np.full(n, user.birth_year or 0),
        np.full(n, start64), np.full(n, origin), registry.ids, registry,
    )
    proba = np.atleast_1d(model.predict_proba(mask.apply(X)))
    order = np.lexsort((registry.ids, -proba))
    return [(int(registry.ids[i]), float(proba[i])) for i in order]

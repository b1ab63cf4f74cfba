"""L1-regularized least squares by cyclic coordinate descent.

The objective is the plain sum of squares plus the penalty,
``sum((X b + b0 - y)^2) + alpha * |b|_1``, with no 1/(2n) factor, so alpha
grows with the number of rows. Features are standardized to zero mean and
unit variance internally and the penalty applies to the standardized
coefficients; reported coefficients are mapped back to the input scale.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True)
class LassoConfig:
    """``alpha=None`` means ``alpha_ratio * alpha_max`` of the training data."""

    alpha: Optional[float] = None
    alpha_ratio: float = 0.01
    max_iterations: int = 1000
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.alpha is not None and self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.alpha_ratio < 0:
            raise ValueError(f"alpha_ratio must be >= 0, got {self.alpha_ratio}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True, eq=False)
class LassoModel:
    coefficients: np.ndarray
    intercept: float
    alpha: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray  # 0 for constant features
    std_coefficients: np.ndarray
    target_mean: float
    converged: bool
    n_iterations: int
    alpha_max: float = float("nan")
    feature_names: tuple = ()
    objective_history: tuple = field(default=(), repr=False)

    @property
    def n_features(self) -> int:
        return len(self.coefficients)

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = X.reshape(1, -1) if single else X
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got shape {np.shape(X)}")
        return X, single

    def predict(self, X):
        X, single = self._check(X)
        out = X @ self.coefficients + self.intercept
        return float(out[0]) if single else out

    def predict_standardized(self, X):
        """Same predictions through the internal standardized parameterization."""
        X, single = self._check(X)
        scale = np.where(self.feature_scale > 0, self.feature_scale, 1.0)
        out = ((X - self.feature_mean) / scale) @ self.std_coefficients + self.target_mean
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "alpha_max": self.alpha_max,
            "feature_names": list(self.feature_names),
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            "std_coefficients": self.std_coefficients.tolist(),
            "target_mean": self.target_mean,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "LassoModel":
        k = len(d["coefficients"])
        return cls(
            coefficients=np.asarray(d["coefficients"], dtype=float),
            intercept=float(d["intercept"]),
            alpha=float(d["alpha"]),
            feature_mean=np.asarray(d.get("feature_mean", [0.0] * k), dtype=float),
            feature_scale=np.asarray(d.get("feature_scale", [1.0] * k), dtype=float),
            std_coefficients=np.asarray(d.get("std_coefficients", d["coefficients"]), dtype=float),
            target_mean=float(d.get("target_mean", d["intercept"])),
            converged=bool(d["converged"]),
            n_iterations=int(d["n_iterations"]),
            alpha_max=float(d.get("alpha_max", float("nan"))),
            feature_names=tuple(d.get("feature_names", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> "LassoModel":
        return cls.from_dict(json.loads(text))


class _Standardized:
    def __init__(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if len(X) < 2:
            raise ValueError(f"need at least 2 examples, got {len(X)}")
        if len(y) != len(X):
            raise ValueError(f"{len(X)} feature rows but {len(y)} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("features and targets must be finite")
        self.n = len(X)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.active = std > 1e-12 * np.maximum(1.0, np.abs(self.mean))
        self.scale = np.where(self.active, std, 0.0)
        self.Z = np.zeros_like(X)
        self.Z[:, self.active] = (X[:, self.active] - self.mean[self.active]) / std[self.active]
        self.Z = np.asfortranarray(self.Z)  # contiguous columns for the coordinate sweeps
        self.y_mean = float(y.mean())
        self.yc = y - self.y_mean
        self.col_sq = (self.Z ** 2).sum(axis=0)

    def alpha_max(self) -> float:
        # Zero is optimal for coordinate j iff |z_j . y| <= alpha / 2.
        if not self.active.any():
            return 0.0
        return float(2.0 * np.max(np.abs(self.Z.T @ self.yc)))

    def objective(self, b, alpha) -> float:
        r = self.yc - self.Z @ b
        return float(r @ r + alpha * np.abs(b).sum())


def _descend(data: _Standardized, alpha: float, b0: np.ndarray, max_iterations: int, tolerance: float):
    b = b0.copy()
    r = data.yc - data.Z @ b
    history = [data.objective(b, alpha)]
    converged = False
    it = 0
    cols = np.flatnonzero(data.active)
    for it in range(1, max_iterations + 1):
        max_delta = 0.0
        for j in cols:
            z = data.Z[:, j]
            rho = z @ r + data.col_sq[j] * b[j]
            new = soft_threshold(rho, alpha / 2.0) / data.col_sq[j]
            delta = new - b[j]
            if delta != 0.0:
                r -= delta * z
                b[j] = new
                max_delta = max(max_delta, abs(delta))
        history.append(data.objective(b, alpha))
        if max_delta < tolerance:
            converged = True
            break
    return b, converged, it, tuple(history)


def _make_model(data: _Standardized, b, alpha, converged, it, history, feature_names) -> LassoModel:
    coef = np.divide(b, data.scale, out=np.zeros_like(b), where=data.active)
    intercept = data.y_mean - float(coef @ data.mean)
    for a in (coef, data.mean, data.scale, b):
        a.setflags(write=False)
    return LassoModel(
        coefficients=coef,
        intercept=intercept,
        alpha=float(alpha),
        feature_mean=data.mean,
        feature_scale=data.scale,
        std_coefficients=b,
        target_mean=data.y_mean,
        converged=converged,
        n_iterations=it,
        alpha_max=data.alpha_max(),
        feature_names=tuple(feature_names),
        objective_history=history,
    )


def alpha_max(X, y) -> float:
    """Smallest alpha at which every coefficient is zero."""
    return _Standardized(X, y).alpha_max()


def fit(X, y, config: LassoConfig = LassoConfig(), feature_names=()) -> LassoModel:
    data = _Standardized(X, y)
    alpha = config.alpha if config.alpha is not None else config.alpha_ratio * data.alpha_max()
    b, converged, it, history = _descend(data, alpha, np.zeros(data.Z.shape[1]), config.max_iterations,
                                         config.tolerance)
    return _make_model(data, b, alpha, converged, it, history, feature_names)


def regularization_path(X, y, alphas: Sequence[float], config: LassoConfig = LassoConfig(),
                        feature_names=()) -> list[LassoModel]:
    """Warm-started fits along a descending alpha sequence."""
    alphas = [float(a) for a in alphas]
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be non-negative")
    if any(a2 > a1 for a1, a2 in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be in descending order")
    data = _Standardized(X, y)
    b = np.zeros(data.Z.shape[1])
    models = []
    for alpha in alphas:
        b, converged, it, history = _descend(data, alpha, b, config.max_iterations, config.tolerance)
        models.append(_make_model(data, b.copy(), alpha, converged, it, history, feature_names))
    return models

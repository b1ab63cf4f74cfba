"""Evaluation of the destination classifier and the duration regressor.

Ratios with a zero denominator come back as ``None`` rather than 0.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegressionReport:
    mae: float
    r2: Optional[float]
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(predicted, truth, name):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValueError(f"{name}: predictions {predicted.shape} and truth {truth.shape} differ in length")
    if not len(truth):
        raise ValueError(f"{name}: need at least one example")
    return predicted, truth


def classification_metrics(predicted, truth) -> ClassificationReport:
    predicted, truth = _pair(predicted, truth, "classification_metrics")
    p = predicted.astype(bool)
    t = truth.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    tn = int(np.count_nonzero(~p & ~t))
    fn = int(np.count_nonzero(~p & t))
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    # precision + recall == 0 makes f1 a 0/0 ratio, reported as None like the others
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationReport((tp + tn) / len(t), precision, recall, f1, tp, fp, tn, fn)


def regression_metrics(predicted, truth) -> RegressionReport:
    """MAE (in the inputs' unit; callers pass minutes) and R^2, None for constant truth."""
    predicted, truth = _pair(predicted, truth, "regression_metrics")
    yhat = predicted.astype(float)
    y = truth.astype(float)
    mae = float(np.mean(np.abs(yhat - y)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((yhat - y) ** 2)) / ss_tot if len(y) >= 2 and ss_tot > 0 else None
    return RegressionReport(mae, r2, len(y))

"""Labeled example sets: positives from history, random negatives, time-ordered 4:1 split."""
from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .features import N_FEATURES, FeatureMask, FeatureVector, feature_matrix, trip_features, write_feature_csv
from .model import Gender, StationRegistry, TripTable, UserKind

TRAIN_NUMERATOR, TRAIN_DENOMINATOR = 4, 5

# Date range the negative departure times are drawn from when reproducing the Divvy study.
DIVVY_TIME_RANGE = (np.datetime64("2013-07-01T00:00:00"), np.datetime64("2015-06-30T23:59:59"))


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: int
    duration_seconds: Optional[int]
    start_time: dt.datetime

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if (self.label == 1) != (self.duration_seconds is not None):
            raise ValueError("a duration is present exactly when label is 1")


def _row_to_vector(row: np.ndarray) -> FeatureVector:
    return FeatureVector(
        user_type=int(row[0]), gender=int(row[1]), age=int(row[2]),
        month=int(row[3]), weekday=int(row[4]), hour=int(row[5]),
        pair=(int(row[6]), int(row[7])),
        coords=(float(row[8]), float(row[9]), float(row[10]), float(row[11])),
        distance_km=float(row[12]),
    )


class ExampleSet:
    """Columnar labeled examples. ``X`` always holds all 13 columns; ``mask`` picks the model inputs.

    ``duration`` is -1 where absent (every negative).
    """

    def __init__(self, X, label, duration, start_time, mask: FeatureMask = FeatureMask.ALL):
        self.X = np.asarray(X, dtype=float).reshape(-1, N_FEATURES)
        self.label = np.asarray(label, dtype=np.int8)
        self.duration = np.asarray(duration, dtype=np.int64)
        self.start_time = np.asarray(start_time, dtype="datetime64[s]")
        self.mask = FeatureMask(mask)
        n = len(self.X)
        if not (len(self.label) == len(self.duration) == len(self.start_time) == n):
            raise ValueError("example columns differ in length")
        if np.any((self.label == 1) != (self.duration >= 0)):
            raise ValueError("a duration is present exactly when label is 1")
        for a in (self.X, self.label, self.duration, self.start_time):
            a.setflags(write=False)

    def __len__(self) -> int:
        return len(self.X)

    def __getitem__(self, i: int) -> LabeledExample:
        t = int(self.duration[i])
        return LabeledExample(
            features=_row_to_vector(self.X[i]),
            label=int(self.label[i]),
            duration_seconds=t if t >= 0 else None,
            start_time=self.start_time[i].astype(dt.datetime),
        )

    def __iter__(self) -> Iterator[LabeledExample]:
        return (self[i] for i in range(len(self)))

    def matrix(self) -> np.ndarray:
        """Model input: the masked feature columns."""
        return self.mask.apply(self.X)

    def take(self, idx) -> "ExampleSet":
        return ExampleSet(self.X[idx], self.label[idx], self.duration[idx], self.start_time[idx], self.mask)

    def with_mask(self, mask: FeatureMask) -> "ExampleSet":
        return ExampleSet(self.X, self.label, self.duration, self.start_time, mask)

    @classmethod
    def concat(cls, parts) -> "ExampleSet":
        parts = list(parts)
        masks = {p.mask for p in parts}
        if len(masks) > 1:
            raise ValueError("cannot pool example sets with different masks")
        return cls(
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.label for p in parts]),
            np.concatenate([p.duration for p in parts]),
            np.concatenate([p.start_time for p in parts]),
            masks.pop(),
        )

    def to_csv(self, path):
        write_feature_csv(path, self.X, self.mask, self.label, self.duration)


def positives(trips: TripTable, registry: StationRegistry, mask: FeatureMask = FeatureMask.ALL) -> ExampleSet:
    return ExampleSet(trip_features(trips, registry), np.ones(len(trips)), trips.duration_seconds,
                      trips.start_time, mask)


def negatives(n: int, registry: StationRegistry, time_range=DIVVY_TIME_RANGE, seed: int = 0,
              mask: FeatureMask = FeatureMask.ALL) -> ExampleSet:
    """Random non-trips, label 0.

    Rider is customer or subscriber with equal odds; subscribers get a
    uniform gender and an age drawn from 1..100. Origin and destination are
    independent uniform draws over all stations; departure is uniform over
    the closed interval ``time_range`` at second resolution.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if not len(registry):
        raise ValueError("registry is empty")
    t0, t1 = (np.datetime64(t, "s") for t in time_range)
    if not t0 < t1:
        raise ValueError(f"time range must satisfy t0 < t1, got {t0} .. {t1}")
    rng = np.random.default_rng(seed)
    kind = rng.integers(0, 2, n)
    gender = np.where(rng.integers(0, 2, n) == 0, int(Gender.MALE), int(Gender.FEMALE))
    age = rng.integers(1, 101, n)
    origin = registry.ids[rng.integers(0, len(registry), n)]
    dest = registry.ids[rng.integers(0, len(registry), n)]
    offset = rng.integers(0, int((t1 - t0).astype(np.int64)) + 1, n)
    start = t0 + offset.astype("timedelta64[s]")
    year = start.astype("datetime64[Y]").astype(np.int64) + 1970
    sub = kind == int(UserKind.SUBSCRIBER)
    gender = np.where(sub, gender, int(Gender.UNKNOWN))
    birth = np.where(sub, year - age, 0)
    X = feature_matrix(kind, gender, birth, start, origin, dest, registry)
    return ExampleSet(X, np.zeros(n), np.full(n, -1), start, mask)


def classification_set(trips: TripTable, registry: StationRegistry, seed: int = 0, time_range=None,
                       mask: FeatureMask = FeatureMask.ALL) -> ExampleSet:
    """Positives pooled with an equal number of negatives (positives first).

    Without ``time_range`` the negatives span the corpus' own first to last departure.
    """
    pos = positives(trips, registry, mask)
    if time_range is None:
        if len(trips) == 0:
            return pos
        time_range = (trips.start_time.min(), max(trips.start_time.max(), trips.start_time.min() + 1))
    neg = negatives(len(trips), registry, time_range, seed, mask)
    return ExampleSet.concat([pos, neg])


def train_size(n: int) -> int:
    # round(4n/5) in exact integer arithmetic; 4n/5 is never exactly half-way.
    return (2 * TRAIN_NUMERATOR * n + TRAIN_DENOMINATOR) // (2 * TRAIN_DENOMINATOR)


def split_indices(start_time: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(start_time)
    if n < TRAIN_DENOMINATOR:
        warnings.warn(f"splitting only {n} examples; the 4:1 split is degenerate", stacklevel=3)
    order = np.argsort(np.asarray(start_time), kind="stable")
    k = train_size(n)
    return order[:k], order[k:]


def split(examples: ExampleSet) -> tuple[ExampleSet, ExampleSet]:
    """Time-ordered 4:1 split: the earliest round(0.8 n) examples train, ties keep input order."""
    train_idx, test_idx = split_indices(examples.start_time)
    return examples.take(train_idx), examples.take(test_idx)

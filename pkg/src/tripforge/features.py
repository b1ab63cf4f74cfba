"""The 13-dimensional station-pair feature vector and its ablation masks.

Layout (fixed order)::

    x1 user type      +1 subscriber, -1 customer
    x2 gender         +1 male subscriber, -1 female subscriber, 0 otherwise
    x3 age            trip start year minus birth year, 0 when unknown
    x4 month          1..12
    x5 weekday        0 = Sunday .. 6 = Saturday
    x6 hour           0..23
    x7 station ids    origin id, destination id (raw numeric)
    x8 coordinates    origin lat, origin lon, destination lat, destination lon
    x9 distance       Manhattan distance in KM
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass

import numpy as np

from .analysis import manhattan_km_arrays
from .model import Gender, StationPair, StationRegistry, TripTable, UserCategory, UserKind

FEATURE_NAMES = (
    "x1_user_type",
    "x2_gender",
    "x3_age",
    "x4_month",
    "x5_weekday",
    "x6_hour",
    "x7_origin_id",
    "x7_destination_id",
    "x8_origin_lat",
    "x8_origin_lon",
    "x8_destination_lat",
    "x8_destination_lon",
    "x9_distance_km",
)
N_FEATURES = len(FEATURE_NAMES)


class FeatureMask(str, enum.Enum):
    ALL = "all"
    USER = "user"
    STATION = "station"
    TIME = "time"

    @property
    def columns(self) -> tuple[int, ...]:
        return _MASK_COLUMNS[self]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(FEATURE_NAMES[i] for i in self.columns)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Drop the masked-out columns of a full 13-column matrix (or vector)."""
        X = np.asarray(X)
        if X.shape[-1] != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} feature columns, got {X.shape[-1]}")
        return X[..., list(self.columns)]


_MASK_COLUMNS = {
    FeatureMask.ALL: tuple(range(13)),
    FeatureMask.USER: (0, 1, 2),
    FeatureMask.TIME: (3, 4, 5),
    FeatureMask.STATION: tuple(range(6, 13)),
}


@dataclass(frozen=True)
class FeatureVector:
    user_type: int
    gender: int
    age: int
    month: int
    weekday: int
    hour: int
    pair: tuple[int, int]
    coords: tuple[float, float, float, float]
    distance_km: float

    def flatten(self, mask: FeatureMask = FeatureMask.ALL) -> np.ndarray:
        full = np.array(
            [self.user_type, self.gender, self.age, self.month, self.weekday, self.hour,
             *self.pair, *self.coords, self.distance_km],
            dtype=float,
        )
        return FeatureMask(mask).apply(full)

    def __len__(self) -> int:
        return N_FEATURES


def user_features(user: UserCategory, trip_year: int) -> tuple[int, int, int]:
    if user.kind == UserKind.CUSTOMER:
        return -1, 0, 0
    x2 = {Gender.MALE: 1, Gender.FEMALE: -1}.get(user.gender, 0)
    x3 = max(trip_year - user.birth_year, 0) if user.birth_year is not None else 0
    return 1, x2, x3


def time_features(start: dt.datetime) -> tuple[int, int, int]:
    # isoweekday: Monday=1 .. Sunday=7
    return start.month, start.isoweekday() % 7, start.hour


def station_features(pair: StationPair, registry: StationRegistry):
    o, d = registry[pair.origin], registry[pair.destination]
    coords = (o.latitude, o.longitude, d.latitude, d.longitude)
    dist = float(manhattan_km_arrays(*coords))
    return (pair.origin, pair.destination), coords, dist


def extract(user: UserCategory, start: dt.datetime, pair: StationPair, registry: StationRegistry) -> FeatureVector:
    x1, x2, x3 = user_features(user, start.year)
    x4, x5, x6 = time_features(start)
    x7, x8, x9 = station_features(pair, registry)
    return FeatureVector(x1, x2, x3, x4, x5, x6, x7, x8, x9)


def extract_masked(user, start, pair, registry, mask: FeatureMask = FeatureMask.ALL) -> np.ndarray:
    return extract(user, start, pair, registry).flatten(mask)


def feature_matrix(kind, gender, birth_year, start, origin, destination,
                   registry: StationRegistry) -> np.ndarray:
    """Vectorized ``extract``: one full 13-column row per trip tuple.

    ``birth_year`` uses 0 for unknown; ``start`` is datetime64.
    """
    kind = np.asarray(kind)
    gender = np.asarray(gender)
    birth_year = np.asarray(birth_year, dtype=np.int64)
    start = np.asarray(start, dtype="datetime64[s]")
    sub = kind == int(UserKind.SUBSCRIBER)
    X = np.empty((len(kind), N_FEATURES), dtype=float)
    X[:, 0] = np.where(sub, 1, -1)
    X[:, 1] = np.select([sub & (gender == Gender.MALE), sub & (gender == Gender.FEMALE)], [1, -1], 0)
    year = start.astype("datetime64[Y]").astype(np.int64) + 1970
    X[:, 2] = np.where(sub & (birth_year > 0), np.maximum(year - birth_year, 0), 0)
    days = start.astype("datetime64[D]")
    X[:, 3] = days.astype("datetime64[M]").astype(np.int64) % 12 + 1
    X[:, 4] = (days.astype(np.int64) + 4) % 7
    X[:, 5] = (start - days).astype("timedelta64[h]").astype(np.int64)
    oi = registry.index_of(origin)
    di = registry.index_of(destination)
    X[:, 6] = registry.ids[oi]
    X[:, 7] = registry.ids[di]
    X[:, 8] = registry.latitudes[oi]
    X[:, 9] = registry.longitudes[oi]
    X[:, 10] = registry.latitudes[di]
    X[:, 11] = registry.longitudes[di]
    X[:, 12] = manhattan_km_arrays(X[:, 8], X[:, 9], X[:, 10], X[:, 11])
    return X


def trip_features(trips: TripTable, registry: StationRegistry) -> np.ndarray:
    return feature_matrix(trips.kind, trips.gender, trips.birth_year, trips.start_time,
                          trips.origin, trips.destination, registry)


def write_feature_csv(path, X: np.ndarray, mask: FeatureMask = FeatureMask.ALL, labels=None, durations=None):
    """One row per example: the mask's feature columns, then label, then duration (blank if absent)."""
    mask = FeatureMask(mask)
    X = np.asarray(X)
    if X.shape[1] == N_FEATURES and mask != FeatureMask.ALL:
        X = mask.apply(X)
    n = len(X)
    labels = np.full(n, "", object) if labels is None else np.asarray(labels)
    durations = np.full(n, -1) if durations is None else np.asarray(durations)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([*mask.names, "label", "duration"])
        for row, y, t in zip(X, labels, durations):
            w.writerow([*(repr(float(v)) for v in row), y, "" if t is None or t < 0 else int(t)])

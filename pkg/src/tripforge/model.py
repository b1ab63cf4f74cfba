"""Core domain types: stations, riders, trips.

Trips are held two ways. ``TripRecord`` is the row-level value type, and
``TripTable`` is the columnar form every bulk operation works on (one numpy
array per field). Both describe the same data and convert losslessly.
"""
from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np


class UserKind(enum.IntEnum):
    CUSTOMER = 0
    SUBSCRIBER = 1


class Gender(enum.IntEnum):
    UNKNOWN = 0
    MALE = 1
    FEMALE = 2


class AgeGroup(str, enum.Enum):
    YOUNG = "Young"
    MID_AGED = "MidAged"
    SENIOR = "Senior"
    UNKNOWN = "Unknown"


class CategoryLabel(str, enum.Enum):
    CUSTOMER = "Customer"
    MALE_SUBSCRIBER = "MaleSubscriber"
    FEMALE_SUBSCRIBER = "FemaleSubscriber"
    OTHER_SUBSCRIBER = "OtherSubscriber"


# Index order of CategoryLabel used by columnar code (see TripTable.category_codes).
CATEGORIES = (
    CategoryLabel.CUSTOMER,
    CategoryLabel.MALE_SUBSCRIBER,
    CategoryLabel.FEMALE_SUBSCRIBER,
    CategoryLabel.OTHER_SUBSCRIBER,
)


@dataclass(frozen=True)
class Station:
    id: int
    name: str
    latitude: float
    longitude: float
    capacity: int = 0

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError(f"station id must be positive, got {self.id}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if self.capacity < 0:
            raise ValueError(f"capacity must be non-negative, got {self.capacity}")


@dataclass(frozen=True)
class UserCategory:
    kind: UserKind
    gender: Gender = Gender.UNKNOWN
    birth_year: Optional[int] = None

    def __post_init__(self):
        if self.kind == UserKind.CUSTOMER and (
            self.gender != Gender.UNKNOWN or self.birth_year is not None
        ):
            raise ValueError("customers carry no gender or birth year")
        if self.birth_year is not None and self.birth_year <= 0:
            raise ValueError(f"birth year must be positive, got {self.birth_year}")

    @classmethod
    def customer(cls) -> "UserCategory":
        return cls(UserKind.CUSTOMER)

    @classmethod
    def subscriber(cls, gender=Gender.UNKNOWN, birth_year=None) -> "UserCategory":
        return cls(UserKind.SUBSCRIBER, Gender(gender), birth_year)


@dataclass(frozen=True)
class TripRecord:
    trip_id: int
    start_time: dt.datetime
    end_time: dt.datetime
    duration_seconds: int
    origin_station_id: int
    destination_station_id: int
    user: UserCategory

    def __post_init__(self):
        if self.trip_id <= 0:
            raise ValueError(f"trip id must be positive, got {self.trip_id}")
        if self.end_time < self.start_time:
            raise ValueError(f"trip {self.trip_id} ends before it starts")
        if self.duration_seconds < 0:
            raise ValueError(f"trip {self.trip_id} has negative duration")

    @property
    def pair(self) -> "StationPair":
        return StationPair(self.origin_station_id, self.destination_station_id)


@dataclass(frozen=True)
class StationPair:
    """Ordered (origin, destination); origin may equal destination."""

    origin: int
    destination: int

    def reversed(self) -> "StationPair":
        return StationPair(self.destination, self.origin)


class StationRegistry:
    """Stations keyed by id, plus sorted coordinate arrays for vectorized lookup."""

    def __init__(self, stations: Iterable[Station] = ()):
        self._by_id: dict[int, Station] = {}
        for s in stations:
            if s.id in self._by_id:
                raise ValueError(f"duplicate station id {s.id}")
            self._by_id[s.id] = s
        ordered = sorted(self._by_id.values(), key=lambda s: s.id)
        self.ids = np.array([s.id for s in ordered], dtype=np.int64)
        self.latitudes = np.array([s.latitude for s in ordered], dtype=float)
        self.longitudes = np.array([s.longitude for s in ordered], dtype=float)
        for a in (self.ids, self.latitudes, self.longitudes):
            a.setflags(write=False)

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Station]:
        return (self._by_id[i] for i in self.ids.tolist())

    def __contains__(self, station_id) -> bool:
        return int(station_id) in self._by_id

    def __getitem__(self, station_id) -> Station:
        try:
            return self._by_id[int(station_id)]
        except KeyError:
            raise KeyError(f"unknown station id {station_id}") from None

    def __eq__(self, other):
        return isinstance(other, StationRegistry) and self._by_id == other._by_id

    def index_of(self, station_ids) -> np.ndarray:
        """Positions of ``station_ids`` in the sorted id array; KeyError on any unknown id."""
        station_ids = np.asarray(station_ids, dtype=np.int64)
        pos = np.searchsorted(self.ids, station_ids)
        pos_c = np.minimum(pos, max(len(self.ids) - 1, 0))
        ok = (pos < len(self.ids)) & (self.ids[pos_c] == station_ids) if len(self.ids) else np.zeros(station_ids.shape, bool)
        if not np.all(ok):
            bad = np.asarray(station_ids)[~ok]
            raise KeyError(f"unknown station id {int(bad.flat[0])}")
        return pos_c

    def contains_all(self, station_ids) -> np.ndarray:
        station_ids = np.asarray(station_ids, dtype=np.int64)
        if not len(self.ids):
            return np.zeros(station_ids.shape, bool)
        pos = np.minimum(np.searchsorted(self.ids, station_ids), len(self.ids) - 1)
        return self.ids[pos] == station_ids


def age_group(user: UserCategory, reference_year: int) -> AgeGroup:
    if user.birth_year is None:
        return AgeGroup.UNKNOWN
    age = reference_year - user.birth_year
    if age < 30:
        return AgeGroup.YOUNG
    if age < 50:
        return AgeGroup.MID_AGED
    return AgeGroup.SENIOR


def category_label(user: UserCategory) -> CategoryLabel:
    if user.kind == UserKind.CUSTOMER:
        return CategoryLabel.CUSTOMER
    if user.gender == Gender.MALE:
        return CategoryLabel.MALE_SUBSCRIBER
    if user.gender == Gender.FEMALE:
        return CategoryLabel.FEMALE_SUBSCRIBER
    return CategoryLabel.OTHER_SUBSCRIBER


def _to_datetime64(t: dt.datetime) -> np.datetime64:
    return np.datetime64(t.replace(tzinfo=None), "s")


def _from_datetime64(t: np.datetime64) -> dt.datetime:
    return t.astype("datetime64[s]").astype(dt.datetime)


@dataclass(frozen=True, eq=False)
class TripTable:
    """Columnar trips. ``birth_year`` uses 0 for missing; times are naive local, second precision."""

    trip_id: np.ndarray
    start_time: np.ndarray
    end_time: np.ndarray
    duration_seconds: np.ndarray
    origin: np.ndarray
    destination: np.ndarray
    kind: np.ndarray
    gender: np.ndarray
    birth_year: np.ndarray

    def __post_init__(self):
        n = len(self.trip_id)
        casts = {
            "trip_id": np.int64,
            "start_time": "datetime64[s]",
            "end_time": "datetime64[s]",
            "duration_seconds": np.int64,
            "origin": np.int64,
            "destination": np.int64,
            "kind": np.int8,
            "gender": np.int8,
            "birth_year": np.int32,
        }
        for name, dtype in casts.items():
            arr = np.array(getattr(self, name), dtype=dtype)
            if arr.shape != (n,):
                raise ValueError(f"column {name} has shape {arr.shape}, expected ({n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def empty(cls) -> "TripTable":
        return cls.from_records([])

    @classmethod
    def from_records(cls, records: Sequence[TripRecord]) -> "TripTable":
        return cls(
            trip_id=[r.trip_id for r in records],
            start_time=np.array([_to_datetime64(r.start_time) for r in records], dtype="datetime64[s]"),
            end_time=np.array([_to_datetime64(r.end_time) for r in records], dtype="datetime64[s]"),
            duration_seconds=[r.duration_seconds for r in records],
            origin=[r.origin_station_id for r in records],
            destination=[r.destination_station_id for r in records],
            kind=[int(r.user.kind) for r in records],
            gender=[int(r.user.gender) for r in records],
            birth_year=[r.user.birth_year or 0 for r in records],
        )

    def __len__(self) -> int:
        return len(self.trip_id)

    def record(self, i: int) -> TripRecord:
        kind = UserKind(int(self.kind[i]))
        if kind == UserKind.CUSTOMER:
            user = UserCategory.customer()
        else:
            by = int(self.birth_year[i])
            user = UserCategory.subscriber(Gender(int(self.gender[i])), by or None)
        return TripRecord(
            trip_id=int(self.trip_id[i]),
            start_time=_from_datetime64(self.start_time[i]),
            end_time=_from_datetime64(self.end_time[i]),
            duration_seconds=int(self.duration_seconds[i]),
            origin_station_id=int(self.origin[i]),
            destination_station_id=int(self.destination[i]),
            user=user,
        )

    def __iter__(self) -> Iterator[TripRecord]:
        return (self.record(i) for i in range(len(self)))

    def __getitem__(self, i: int) -> TripRecord:
        return self.record(i)

    def take(self, idx) -> "TripTable":
        return TripTable(**{name: getattr(self, name)[idx] for name in _COLUMNS})

    @classmethod
    def concat(cls, tables: Sequence["TripTable"]) -> "TripTable":
        if not tables:
            return cls.empty()
        return cls(**{name: np.concatenate([getattr(t, name) for t in tables]) for name in _COLUMNS})

    def __eq__(self, other) -> bool:
        return isinstance(other, TripTable) and len(self) == len(other) and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in _COLUMNS
        )

    @property
    def start_year(self) -> np.ndarray:
        return self.start_time.astype("datetime64[Y]").astype(np.int64) + 1970

    def category_codes(self) -> np.ndarray:
        """Index into ``CATEGORIES`` for every trip."""
        codes = np.zeros(len(self), dtype=np.int8)
        sub = self.kind == UserKind.SUBSCRIBER
        codes[sub & (self.gender == Gender.MALE)] = 1
        codes[sub & (self.gender == Gender.FEMALE)] = 2
        codes[sub & (self.gender == Gender.UNKNOWN)] = 3
        return codes

    def ages(self) -> np.ndarray:
        """Age at trip start year; -1 where unknown."""
        known = (self.kind == UserKind.SUBSCRIBER) & (self.birth_year > 0)
        return np.where(known, self.start_year - self.birth_year, -1)


_COLUMNS = (
    "trip_id",
    "start_time",
    "end_time",
    "duration_seconds",
    "origin",
    "destination",
    "kind",
    "gender",
    "birth_year",
)


def age_group_codes(ages: np.ndarray) -> np.ndarray:
    """Vectorized ``age_group``: 0 young, 1 mid-aged, 2 senior, 3 unknown (age < 0)."""
    ages = np.asarray(ages)
    return np.select([ages < 0, ages < 30, ages < 50], [3, 0, 1], default=2).astype(np.int8)


AGE_GROUPS = (AgeGroup.YOUNG, AgeGroup.MID_AGED, AgeGroup.SENIOR, AgeGroup.UNKNOWN)

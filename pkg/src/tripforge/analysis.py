"""Descriptive statistics over a trip corpus: who rides, when, how long, where."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    AGE_GROUPS,
    CATEGORIES,
    Gender,
    Station,
    StationRegistry,
    TripTable,
    UserKind,
    age_group_codes,
)

KM_PER_DEGREE = 111.195

DURATION_BINS = ("<30m", "30m-1h", "1h-2h", "2h-5h", "5h-10h", ">10h")
DURATION_EDGES_S = np.array([30 * 60, 3600, 2 * 3600, 5 * 3600, 10 * 3600])
WEEKDAYS = ("Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday")
CATEGORY_NAMES = tuple(c.value for c in CATEGORIES)


def manhattan_km_arrays(lat_a, lon_a, lat_b, lon_b):
    lat_a, lon_a, lat_b, lon_b = (np.asarray(v, dtype=float) for v in (lat_a, lon_a, lat_b, lon_b))
    mean_lat = np.radians((lat_a + lat_b) / 2.0)
    return KM_PER_DEGREE * (np.abs(lat_a - lat_b) + np.abs(lon_a - lon_b) * np.cos(mean_lat))


def manhattan_km(a: Station, b: Station) -> float:
    """North-south plus east-west displacement in KM, longitude scaled at the pair's mean latitude."""
    mean_lat = math.radians((a.latitude + b.latitude) / 2.0)
    return KM_PER_DEGREE * (abs(a.latitude - b.latitude) + abs(a.longitude - b.longitude) * math.cos(mean_lat))


def _by_category(codes: np.ndarray, values: np.ndarray, n_bins: int) -> dict[str, list[int]]:
    flat = np.bincount(codes.astype(np.int64) * n_bins + values, minlength=len(CATEGORIES) * n_bins)
    return {name: flat[i * n_bins:(i + 1) * n_bins].tolist() for i, name in enumerate(CATEGORY_NAMES)}


def _fraction(count, total):
    return count / total if total else None


@dataclass
class CompositionReport:
    total: int
    counts: dict
    fractions: dict
    subscriber_fraction: float | None
    # gender -> age group -> trip count, for subscribers of known gender.
    subscriber_breakdown: dict
    subscriber_breakdown_fractions: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_rows(self) -> list[dict]:
        rows = [{"group": k, "age_group": "", "count": v, "fraction": self.fractions[k]}
                for k, v in self.counts.items()]
        for g, by_age in self.subscriber_breakdown.items():
            for a, v in by_age.items():
                rows.append({"group": g, "age_group": a, "count": v,
                             "fraction": self.subscriber_breakdown_fractions[g][a]})
        return rows


def composition(trips: TripTable) -> CompositionReport:
    total = len(trips)
    codes = trips.category_codes()
    counts = np.bincount(codes, minlength=len(CATEGORIES))
    sub = int(np.count_nonzero(trips.kind == UserKind.SUBSCRIBER))
    ages = age_group_codes(trips.ages())
    breakdown, fractions = {}, {}
    for g, name in ((Gender.MALE, "Male"), (Gender.FEMALE, "Female")):
        sel = (trips.kind == UserKind.SUBSCRIBER) & (trips.gender == g)
        c = np.bincount(ages[sel], minlength=len(AGE_GROUPS))
        breakdown[name] = {a.value: int(c[i]) for i, a in enumerate(AGE_GROUPS)}
        fractions[name] = {a.value: _fraction(int(c[i]), total) for i, a in enumerate(AGE_GROUPS)}
    return CompositionReport(
        total=total,
        counts={n: int(c) for n, c in zip(CATEGORY_NAMES, counts)},
        fractions={n: _fraction(int(c), total) for n, c in zip(CATEGORY_NAMES, counts)},
        subscriber_fraction=_fraction(sub, total),
        subscriber_breakdown=breakdown,
        subscriber_breakdown_fractions=fractions,
    )


@dataclass
class TemporalReport:
    year: int | None
    weekday_scope: str
    year_total: int
    scope_total: int
    days: list = field(default_factory=list)
    per_day: dict = field(default_factory=dict)
    per_month: dict = field(default_factory=dict)
    per_weekday: dict = field(default_factory=dict)
    per_hour: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_rows(self) -> list[dict]:
        rows = []
        views = (
            ("day", self.days, self.per_day),
            ("month", list(range(1, 13)), self.per_month),
            ("weekday", list(WEEKDAYS), self.per_weekday),
            ("hour", list(range(24)), self.per_hour),
        )
        for view, labels, counts in views:
            for i, label in enumerate(labels):
                row = {"view": view, "bin": label}
                row.update({c: counts[c][i] for c in CATEGORY_NAMES})
                rows.append(row)
        return rows


def _time_parts(start: np.ndarray):
    days = start.astype("datetime64[D]")
    month = days.astype("datetime64[M]").astype(np.int64) % 12
    weekday = (days.astype(np.int64) + 4) % 7
    hour = (start - days).astype("timedelta64[h]").astype(np.int64)
    return days, month, weekday, hour


def temporal(trips: TripTable, year: int | None = None, weekday_scope: str = "all") -> TemporalReport:
    """Day/month views cover ``year`` only; weekday/hour views cover every trip
    (``weekday_scope="all"``) or the same year (``"year"``)."""
    if weekday_scope not in ("all", "year"):
        raise ValueError(f"weekday_scope must be 'all' or 'year', got {weekday_scope!r}")
    codes = trips.category_codes()
    days, month, weekday, hour = _time_parts(trips.start_time)
    report = TemporalReport(year=year, weekday_scope=weekday_scope, year_total=0, scope_total=len(trips))
    in_year = np.zeros(len(trips), bool)
    if year is not None:
        first = np.datetime64(f"{year:04d}-01-01")
        last = np.datetime64(f"{year + 1:04d}-01-01")
        in_year = (days >= first) & (days < last)
        n_days = int((last - first).astype(int))
        report.year_total = int(in_year.sum())
        report.days = [str(d) for d in np.arange(first, last)]
        report.per_day = _by_category(codes[in_year], (days[in_year] - first).astype(np.int64), n_days)
        report.per_month = _by_category(codes[in_year], month[in_year], 12)
    else:
        report.per_month = {c: [0] * 12 for c in CATEGORY_NAMES}
    scope = in_year if weekday_scope == "year" else np.ones(len(trips), bool)
    report.scope_total = int(scope.sum())
    report.per_weekday = _by_category(codes[scope], weekday[scope], 7)
    report.per_hour = _by_category(codes[scope], hour[scope], 24)
    return report


@dataclass
class DurationReport:
    total: int
    mean_minutes: float | None
    mean_minutes_by_category: dict
    bins: tuple
    counts: dict

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["bins"] = list(self.bins)
        return d

    def to_rows(self) -> list[dict]:
        rows = []
        for i, b in enumerate(self.bins):
            row = {"bin": b}
            row.update({c: self.counts[c][i] for c in CATEGORY_NAMES})
            rows.append(row)
        return rows


def duration_bin(seconds) -> np.ndarray:
    """Index into DURATION_BINS; each bin includes its lower edge."""
    return np.searchsorted(DURATION_EDGES_S, np.asarray(seconds), side="right")


def durations(trips: TripTable) -> DurationReport:
    codes = trips.category_codes()
    secs = trips.duration_seconds
    means = {}
    for i, name in enumerate(CATEGORY_NAMES):
        sel = secs[codes == i]
        means[name] = float(sel.mean() / 60.0) if len(sel) else None
    return DurationReport(
        total=len(trips),
        mean_minutes=float(secs.mean() / 60.0) if len(secs) else None,
        mean_minutes_by_category=means,
        bins=DURATION_BINS,
        counts=_by_category(codes, duration_bin(secs), len(DURATION_BINS)),
    )


# Aggregate groups reported alongside the four categories.
SPATIAL_GROUPS = CATEGORY_NAMES + ("Subscriber", "All")


def _group_masks(trips: TripTable) -> dict[str, np.ndarray]:
    codes = trips.category_codes()
    masks = {name: codes == i for i, name in enumerate(CATEGORY_NAMES)}
    masks["Subscriber"] = trips.kind == UserKind.SUBSCRIBER
    masks["All"] = np.ones(len(trips), bool)
    return masks


def top_k(keys: np.ndarray, k: int) -> list[tuple]:
    """Most frequent rows of ``keys`` (shape n x m), count descending, ties by ascending key."""
    keys = np.asarray(keys)
    if not len(keys):
        return []
    keys = keys.reshape(len(keys), -1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    # np.unique sorts keys ascending; a stable sort on -count keeps that order within ties.
    order = np.argsort(-counts, kind="stable")[:k]
    return [(tuple(int(v) for v in uniq[i]), int(counts[i])) for i in order]


@dataclass
class SpatialReport:
    k: int
    bin_width_km: float
    distance_hist: dict
    mean_km: dict
    top_origins: dict
    top_destinations: dict
    top_pairs: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_rows(self) -> list[dict]:
        rows = []
        for group, hist in self.distance_hist.items():
            for i, c in enumerate(hist):
                rows.append({"table": "distance", "group": group, "rank": "", "bin_start_km": i * self.bin_width_km,
                             "origin": "", "destination": "", "count": c})
        for table, data in (("origin", self.top_origins), ("destination", self.top_destinations)):
            for group, entries in data.items():
                for r, e in enumerate(entries, 1):
                    rows.append({"table": table, "group": group, "rank": r, "bin_start_km": "",
                                 "origin": e["station_id"] if table == "origin" else "",
                                 "destination": e["station_id"] if table == "destination" else "",
                                 "count": e["count"]})
        for group, entries in self.top_pairs.items():
            for r, e in enumerate(entries, 1):
                rows.append({"table": "pair", "group": group, "rank": r, "bin_start_km": "",
                             "origin": e["origin"], "destination": e["destination"], "count": e["count"]})
        return rows


def _station_entry(registry, sid, count):
    s = registry[sid]
    return {"station_id": sid, "name": s.name, "latitude": s.latitude, "longitude": s.longitude, "count": count}


def trip_distances(trips: TripTable, registry: StationRegistry) -> np.ndarray:
    o = registry.index_of(trips.origin)
    d = registry.index_of(trips.destination)
    lat, lon = registry.latitudes, registry.longitudes
    return manhattan_km_arrays(lat[o], lon[o], lat[d], lon[d])


def spatial(trips: TripTable, registry: StationRegistry, k: int = 10, bin_width_km: float = 0.25) -> SpatialReport:
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if bin_width_km <= 0:
        raise ValueError(f"bin width must be positive, got {bin_width_km}")
    km = trip_distances(trips, registry)
    bins = np.floor(km / bin_width_km).astype(np.int64)
    n_bins = int(bins.max()) + 1 if len(bins) else 0
    report = SpatialReport(k=k, bin_width_km=bin_width_km, distance_hist={}, mean_km={},
                           top_origins={}, top_destinations={}, top_pairs={})
    for group, m in _group_masks(trips).items():
        report.distance_hist[group] = np.bincount(bins[m], minlength=n_bins).tolist()
        report.mean_km[group] = float(km[m].mean()) if m.any() else None
        report.top_origins[group] = [_station_entry(registry, key[0], c) for key, c in top_k(trips.origin[m], k)]
        report.top_destinations[group] = [_station_entry(registry, key[0], c)
                                          for key, c in top_k(trips.destination[m], k)]
        pairs = np.column_stack([trips.origin[m], trips.destination[m]])
        entries = []
        for (o, d), c in top_k(pairs, k):
            so, sd = registry[o], registry[d]
            entries.append({"origin": o, "destination": d, "count": c,
                            "origin_name": so.name, "destination_name": sd.name,
                            "origin_latitude": so.latitude, "origin_longitude": so.longitude,
                            "destination_latitude": sd.latitude, "destination_longitude": sd.longitude})
        report.top_pairs[group] = entries
    return report


@dataclass
class BalanceReport:
    stations: list
    more_checked_out: int
    more_returned: int
    balanced: int
    inactive: int
    balanced_ids: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_rows(self) -> list[dict]:
        return list(self.stations)


def usage_balance(trips: TripTable, registry: StationRegistry) -> BalanceReport:
    """Per-station checkout/return counts. Stations with neither are flagged inactive
    and left out of the more-out / more-in / balanced tallies."""
    n = len(registry)
    out = np.bincount(registry.index_of(trips.origin), minlength=n)
    back = np.bincount(registry.index_of(trips.destination), minlength=n)
    active = (out + back) > 0
    rows = [
        {"station_id": int(sid), "checked_out": int(a), "returned": int(b), "active": bool(act)}
        for sid, a, b, act in zip(registry.ids, out, back, active)
    ]
    bal = active & (out == back)
    return BalanceReport(
        stations=rows,
        more_checked_out=int(np.count_nonzero(active & (out > back))),
        more_returned=int(np.count_nonzero(active & (out < back))),
        balanced=int(np.count_nonzero(bal)),
        inactive=int(np.count_nonzero(~active)),
        balanced_ids=registry.ids[bal].tolist(),
    )

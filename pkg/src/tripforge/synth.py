"""Seeded synthetic corpora in the shape of the Divvy data, for desk-scale runs.

Destinations follow a gravity model (popular, nearby stations are likely),
so station features carry real signal; durations grow with distance and are
longer for customers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import manhattan_km_arrays
from .model import Gender, Station, StationRegistry, TripTable, UserKind

# Chicago lakefront box.
LAT_RANGE = (41.80, 41.98)
LON_RANGE = (-87.72, -87.58)


@dataclass(frozen=True)
class SynthConfig:
    # Customer, male subscriber, female subscriber, subscriber with blank gender.
    category_probs: tuple = (0.34, 0.49, 0.16, 0.01)
    first_day: str = "2013-07-01"
    last_day: str = "2015-06-30"
    month_weights: tuple = (0.15, 0.2, 0.45, 0.8, 1.2, 1.5, 1.7, 1.7, 1.4, 1.0, 0.5, 0.3)
    # Sunday first.
    subscriber_weekday_weights: tuple = (0.6, 1.0, 1.05, 1.05, 1.0, 0.95, 0.65)
    customer_weekday_weights: tuple = (1.9, 0.55, 0.5, 0.5, 0.55, 0.8, 2.0)
    subscriber_hour_weights: tuple = (
        0.3, 0.15, 0.1, 0.05, 0.05, 0.2, 1.0, 3.5, 5.0, 3.0, 1.5, 1.5,
        2.0, 2.0, 1.8, 2.2, 3.5, 5.5, 4.0, 2.5, 1.6, 1.2, 0.9, 0.6,
    )
    customer_hour_weights: tuple = (
        0.3, 0.2, 0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.6, 1.2, 2.5, 3.5,
        4.2, 4.6, 4.8, 4.8, 4.6, 4.2, 3.5, 2.6, 1.8, 1.2, 0.8, 0.5,
    )
    # Subscriber age groups (young, mid-aged, senior) and share with no birth year.
    age_group_probs: tuple = (0.40, 0.47, 0.13)
    missing_birth_year: float = 0.01
    # Gravity decay length (KM) for subscriber / customer destination choice.
    subscriber_decay_km: float = 1.4
    customer_decay_km: float = 2.5
    customer_self_loop_boost: float = 6.0
    # Duration model: minutes per KM, fixed overhead, lognormal spread, customer dwell mean.
    subscriber_min_per_km: float = 4.2
    customer_min_per_km: float = 6.5
    overhead_min: float = 3.0
    duration_sigma: float = 0.35
    customer_dwell_min: float = 9.0

    def __post_init__(self):
        if len(self.category_probs) != 4 or abs(sum(self.category_probs) - 1) > 1e-9:
            raise ValueError("category_probs must be 4 probabilities summing to 1")

    @property
    def subscriber_fraction(self) -> float:
        return float(sum(self.category_probs[1:]))


def _normalize(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def synth_stations(rng: np.random.Generator, n_stations: int) -> StationRegistry:
    lat = rng.uniform(*LAT_RANGE, n_stations).round(6)
    lon = rng.uniform(*LON_RANGE, n_stations).round(6)
    cap = rng.integers(11, 40, n_stations)
    return StationRegistry(
        Station(i + 1, f"Station {i + 1}", float(lat[i]), float(lon[i]), int(cap[i]))
        for i in range(n_stations)
    )


def _sample_rows(rng, cdf: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Draw one column index per entry of ``rows`` from the row-wise CDF matrix ``cdf``."""
    n_rows, n_cols = cdf.shape
    flat = (cdf + np.arange(n_rows)[:, None]).ravel()
    u = rng.random(len(rows))
    pos = np.searchsorted(flat, rows + u, side="right")
    return np.minimum(pos - rows * n_cols, n_cols - 1)


def synth_corpus(seed: int, n_trips: int, n_stations: int,
                 config: SynthConfig = SynthConfig()) -> tuple[StationRegistry, TripTable]:
    if n_stations < 2:
        raise ValueError(f"need at least 2 stations, got {n_stations}")
    if n_trips < 0:
        raise ValueError(f"n_trips must be non-negative, got {n_trips}")
    cfg = config
    rng = np.random.default_rng(seed)
    registry = synth_stations(rng, n_stations)
    lat, lon = registry.latitudes, registry.longitudes
    dist = manhattan_km_arrays(lat[:, None], lon[:, None], lat[None, :], lon[None, :])

    # Station popularity; customers favour a handful of "attraction" stations.
    popularity = rng.lognormal(0.0, 0.8, n_stations)
    attraction = np.ones(n_stations)
    attraction[rng.choice(n_stations, max(1, n_stations // 10), replace=False)] = 8.0
    origin_w = [popularity, popularity * attraction]

    cat = rng.choice(4, size=n_trips, p=_normalize(cfg.category_probs))
    is_customer = cat == 0

    # Day, hour, minute of departure.
    days = np.arange(np.datetime64(cfg.first_day), np.datetime64(cfg.last_day) + 1)
    month = days.astype("datetime64[M]").astype(int) % 12
    weekday = (days.astype(int) + 4) % 7
    month_w = np.asarray(cfg.month_weights)[month]
    day_cdf = np.vstack([
        np.cumsum(_normalize(month_w * np.asarray(cfg.subscriber_weekday_weights)[weekday])),
        np.cumsum(_normalize(month_w * np.asarray(cfg.customer_weekday_weights)[weekday])),
    ])
    hour_cdf = np.vstack([
        np.cumsum(_normalize(cfg.subscriber_hour_weights)),
        np.cumsum(_normalize(cfg.customer_hour_weights)),
    ])
    group = is_customer.astype(np.int64)
    day = days[_sample_rows(rng, day_cdf, group)]
    hour = _sample_rows(rng, hour_cdf, group)
    minute = rng.integers(0, 60, n_trips)
    start = day.astype("datetime64[s]") + (hour * 3600 + minute * 60).astype("timedelta64[s]")

    # Origin then destination.
    origin_cdf = np.vstack([np.cumsum(_normalize(w)) for w in origin_w])
    o = _sample_rows(rng, origin_cdf, group)
    sub_dest = popularity[None, :] * np.exp(-dist / cfg.subscriber_decay_km)
    np.fill_diagonal(sub_dest, sub_dest.diagonal() * 0.1)
    cust_dest = (popularity * attraction)[None, :] * np.exp(-dist / cfg.customer_decay_km)
    np.fill_diagonal(cust_dest, cust_dest.diagonal() * cfg.customer_self_loop_boost)
    dest_cdf = np.vstack([
        np.cumsum(sub_dest / sub_dest.sum(axis=1, keepdims=True), axis=1),
        np.cumsum(cust_dest / cust_dest.sum(axis=1, keepdims=True), axis=1),
    ])
    d = _sample_rows(rng, dest_cdf, o + group * n_stations)

    # Subscriber demographics.
    gender = np.select([cat == 1, cat == 2], [int(Gender.MALE), int(Gender.FEMALE)], int(Gender.UNKNOWN))
    age_grp = rng.choice(3, size=n_trips, p=_normalize(cfg.age_group_probs))
    lo = np.array([17, 30, 50])[age_grp]
    hi = np.array([29, 49, 75])[age_grp]
    age = rng.integers(lo, hi + 1)
    start_year = start.astype("datetime64[Y]").astype(np.int64) + 1970
    birth = np.where(rng.random(n_trips) < cfg.missing_birth_year, 0, start_year - age)
    birth = np.where(is_customer, 0, birth)

    # Duration grows with distance; customers ride slower and linger.
    km = dist[o, d]
    per_km = np.where(is_customer, cfg.customer_min_per_km, cfg.subscriber_min_per_km)
    minutes = (cfg.overhead_min + km * per_km) * rng.lognormal(0.0, cfg.duration_sigma, n_trips)
    minutes += np.where(is_customer, rng.exponential(cfg.customer_dwell_min, n_trips), 0.0)
    dur = np.rint(minutes * 60).astype(np.int64)
    end = start + dur.astype("timedelta64[s]")
    end = end.astype("datetime64[m]").astype("datetime64[s]")

    order = np.argsort(start, kind="stable")
    trips = TripTable(
        trip_id=np.arange(1, n_trips + 1),
        start_time=start[order],
        end_time=end[order],
        duration_seconds=dur[order],
        origin=registry.ids[o][order],
        destination=registry.ids[d][order],
        kind=np.where(is_customer, int(UserKind.CUSTOMER), int(UserKind.SUBSCRIBER))[order],
        gender=gender[order],
        birth_year=birth[order],
    )
    return registry, trips

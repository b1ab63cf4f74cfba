"""Read and write Divvy-format trip and station CSV files."""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .model import Gender, Station, StationRegistry, TripTable, UserKind

logger = logging.getLogger(__name__)

CHUNK_ROWS = 500_000


@dataclass(frozen=True)
class ColumnMap:
    """Source column names for every target field, plus the timestamp format."""

    trip_id: str = "trip_id"
    start_time: str = "starttime"
    end_time: str = "stoptime"
    duration: str = "tripduration"
    origin: str = "from_station_id"
    origin_name: str = "from_station_name"
    destination: str = "to_station_id"
    destination_name: str = "to_station_name"
    bike_id: str = "bikeid"
    user_type: str = "usertype"
    gender: str = "gender"
    birth_year: str = "birthyear"
    station_id: str = "id"
    station_name: str = "name"
    latitude: str = "latitude"
    longitude: str = "longitude"
    capacity: str = "dpcapacity"
    timestamp_format: str = "%m/%d/%Y %H:%M"

    def __post_init__(self):
        trip_cols = [self.trip_id, self.start_time, self.end_time, self.duration, self.origin,
                     self.destination, self.user_type, self.gender, self.birth_year]
        station_cols = [self.station_id, self.station_name, self.latitude, self.longitude, self.capacity]
        for cols in (trip_cols, station_cols):
            dup = [c for c, k in Counter(cols).items() if k > 1]
            if dup:
                raise ValueError(f"source column mapped to more than one field: {dup}")

    @property
    def trip_columns(self) -> list[str]:
        return [self.trip_id, self.start_time, self.end_time, self.bike_id, self.duration,
                self.origin, self.origin_name, self.destination, self.destination_name,
                self.user_type, self.gender, self.birth_year]

    @property
    def station_columns(self) -> list[str]:
        return [self.station_id, self.station_name, self.latitude, self.longitude, self.capacity]


PRESETS = {
    "default": ColumnMap(),
    "divvy2013": ColumnMap(birth_year="birthday", timestamp_format="%Y-%m-%d %H:%M"),
    "divvy2014": ColumnMap(),
    "divvy2015": ColumnMap(),
}


def preset(name: str) -> ColumnMap:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown column preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class IngestReport:
    path: str = ""
    rows_read: int = 0
    rows_accepted: int = 0
    rows_rejected: int = 0
    rejection_reasons: dict = field(default_factory=dict)
    # Accepted rows whose stored duration disagrees with the timestamps by more than 60 s.
    duration_mismatches: int = 0
    rejected_lines: list = field(default_factory=list, repr=False)

    def reject(self, lines, reason: str):
        lines = list(lines)
        if not lines:
            return
        self.rows_rejected += len(lines)
        self.rejection_reasons[reason] = self.rejection_reasons.get(reason, 0) + len(lines)
        self.rejected_lines.extend((int(line), reason) for line in lines)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("rejected_lines")
        d["rejection_reasons"] = dict(sorted(self.rejection_reasons.items()))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_reject_log(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["line", "reason"])
            w.writerows(sorted(self.rejected_lines))


def _parse_int(col: pd.Series) -> tuple[np.ndarray, np.ndarray]:
    """Integer parse tolerant of thousands separators and a trailing '.0'."""
    num = pd.to_numeric(col.str.replace(",", "", regex=False).str.strip(), errors="coerce")
    vals = num.to_numpy(dtype=float, na_value=np.nan)
    ok = np.isfinite(vals) & (vals == np.round(vals))
    return np.where(ok, vals, 0).astype(np.int64), ok


def _parse_float(col: pd.Series) -> tuple[np.ndarray, np.ndarray]:
    vals = pd.to_numeric(col.str.strip(), errors="coerce").to_numpy(dtype=float, na_value=np.nan)
    return vals, np.isfinite(vals)


def _parse_time(col: pd.Series, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    t = pd.to_datetime(col.str.strip(), format=fmt, errors="coerce")
    ok = t.notna().to_numpy()
    vals = t.to_numpy(dtype="datetime64[s]")
    return vals, ok


def _read_csv(path, columns, chunksize=None):
    wanted = set(columns)
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, usecols=lambda c: c in wanted,
                           chunksize=chunksize, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ValueError(f"{path}: missing header row") from None


def _check_header(path, wanted):
    with open(path, newline="", encoding="utf-8") as f:
        header = next(csv.reader(f), None)
    if header is None:
        raise ValueError(f"{path}: missing header row")
    missing = [c for c in wanted if c not in header]
    if missing:
        raise ValueError(f"{path}: header lacks required columns {missing}")


def read_stations(path, column_map: ColumnMap = ColumnMap()) -> tuple[StationRegistry, IngestReport]:
    cm = column_map
    required = [cm.station_id, cm.station_name, cm.latitude, cm.longitude]
    _check_header(path, required)
    df = _read_csv(path, cm.station_columns)
    report = IngestReport(path=str(path), rows_read=len(df))
    stations, seen = [], set()
    caps = df[cm.capacity] if cm.capacity in df else pd.Series([""] * len(df))
    for i, (sid, name, lat, lon, cap) in enumerate(
        zip(df[cm.station_id], df[cm.station_name], df[cm.latitude], df[cm.longitude], caps)
    ):
        line = i + 2
        try:
            sid = int(float(sid.replace(",", "")))
            station = Station(sid, name, float(lat), float(lon), int(float(cap)) if cap.strip() else 0)
        except ValueError:
            report.reject([line], "BadStationRow")
            continue
        if sid in seen:
            report.reject([line], "DuplicateStationId")
            continue
        seen.add(sid)
        stations.append(station)
    report.rows_accepted = len(stations)
    return StationRegistry(stations), report


def load_stations(path, column_map: ColumnMap = ColumnMap()) -> StationRegistry:
    return read_stations(path, column_map)[0]


def _parse_trip_chunk(df: pd.DataFrame, first_line: int, cm: ColumnMap, registry: StationRegistry,
                      report: IngestReport) -> dict:
    n = len(df)
    lines = np.arange(first_line, first_line + n)
    keep = np.ones(n, bool)

    def fail(bad, reason):
        nonlocal keep
        bad = bad & keep
        report.reject(lines[bad], reason)
        keep &= ~bad

    trip_id, ok = _parse_int(df[cm.trip_id])
    fail(~ok | (trip_id <= 0), "BadTripId")
    start, ok_s = _parse_time(df[cm.start_time], cm.timestamp_format)
    end, ok_e = _parse_time(df[cm.end_time], cm.timestamp_format)
    fail(~(ok_s & ok_e), "BadTimestamp")
    dur_f, ok = _parse_float(df[cm.duration].str.replace(",", "", regex=False))
    fail(~ok | (dur_f < 0), "BadDuration")
    fail(end < start, "EndBeforeStart")
    origin, ok_o = _parse_int(df[cm.origin])
    dest, ok_d = _parse_int(df[cm.destination])
    fail(~(ok_o & ok_d), "BadStationId")
    fail(~(registry.contains_all(origin) & registry.contains_all(dest)), "StationUnknown")
    utype = df[cm.user_type].str.strip().str.lower()
    kind = np.select([utype == "subscriber", utype == "customer"], [1, 0], default=-1)
    fail(kind < 0, "BadUserType")

    gtext = df[cm.gender].str.strip().str.lower() if cm.gender in df else pd.Series([""] * n)
    gender = np.select([gtext == "male", gtext == "female"], [int(Gender.MALE), int(Gender.FEMALE)],
                       default=int(Gender.UNKNOWN))
    if cm.birth_year in df:
        birth, ok_b = _parse_int(df[cm.birth_year])
        birth = np.where(ok_b & (birth > 0), birth, 0)
    else:
        birth = np.zeros(n, np.int64)
    customer = kind == int(UserKind.CUSTOMER)
    gender = np.where(customer, int(Gender.UNKNOWN), gender)
    birth = np.where(customer, 0, birth)

    dur = np.rint(dur_f).astype(np.int64)
    elapsed = (end - start).astype(np.int64)
    report.duration_mismatches += int(np.count_nonzero(keep & (np.abs(elapsed - dur) > 60)))

    return {
        "trip_id": trip_id[keep],
        "start_time": start[keep],
        "end_time": end[keep],
        "duration_seconds": dur[keep],
        "origin": origin[keep],
        "destination": dest[keep],
        "kind": kind[keep],
        "gender": gender[keep],
        "birth_year": birth[keep],
        "_line": lines[keep],
    }


def load_trips(path, column_map: ColumnMap = ColumnMap(), registry: StationRegistry | None = None,
               reject_log=None) -> tuple[TripTable, IngestReport]:
    """Parse one trip file, in file order.

    Malformed rows and rows naming stations missing from ``registry`` are
    rejected and counted, never fatal. A later row repeating an earlier
    trip_id is rejected as ``DuplicateTripId``. With ``reject_log`` set, the
    rejected line numbers and reasons are written there as CSV.
    """
    cm = column_map
    if registry is None:
        raise ValueError("a station registry is required to validate trips")
    required = [cm.trip_id, cm.start_time, cm.end_time, cm.duration, cm.origin, cm.destination,
                cm.user_type]
    _check_header(path, required)
    report = IngestReport(path=str(path))
    parts = []
    first_line = 2
    for chunk in _read_csv(path, cm.trip_columns, chunksize=CHUNK_ROWS):
        report.rows_read += len(chunk)
        parts.append(_parse_trip_chunk(chunk, first_line, cm, registry, report))
        first_line += len(chunk)

    if parts:
        cols = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    else:
        cols = {k: np.array([], dtype=np.int64) for k in
                ("trip_id", "duration_seconds", "origin", "destination", "kind", "gender", "birth_year", "_line")}
        cols["start_time"] = cols["end_time"] = np.array([], dtype="datetime64[s]")

    _, first = np.unique(cols["trip_id"], return_index=True)
    dup = np.ones(len(cols["trip_id"]), bool)
    dup[first] = False
    if dup.any():
        report.reject(cols["_line"][dup], "DuplicateTripId")
        cols = {k: v[~dup] for k, v in cols.items()}
    cols.pop("_line")

    table = TripTable(**cols)
    report.rows_accepted = len(table)
    if report.rows_rejected:
        logger.info("%s: rejected %d of %d rows %s", path, report.rows_rejected, report.rows_read,
                    report.rejection_reasons)
    if reject_log is not None:
        report.write_reject_log(reject_log)
    return table, report


def write_stations_csv(registry: StationRegistry, path, column_map: ColumnMap = ColumnMap()):
    cm = column_map
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(cm.station_columns)
        for s in registry:
            w.writerow([s.id, s.name, repr(s.latitude), repr(s.longitude), s.capacity])


def write_trips_csv(trips: TripTable, path, registry: StationRegistry | None = None,
                    column_map: ColumnMap = ColumnMap()):
    """Write trips in the canonical layout of ``column_map``. Times are rendered at its format's precision."""
    cm = column_map
    names = {s.id: s.name for s in registry} if registry is not None else {}
    fmt = cm.timestamp_format
    start = pd.to_datetime(trips.start_time).strftime(fmt)
    end = pd.to_datetime(trips.end_time).strftime(fmt)
    kind = np.where(trips.kind == int(UserKind.SUBSCRIBER), "Subscriber", "Customer")
    gender = np.array(["", "Male", "Female"])[trips.gender]
    birth = np.where(trips.birth_year > 0, trips.birth_year.astype(str), "")
    df = pd.DataFrame({
        cm.trip_id: trips.trip_id,
        cm.start_time: start,
        cm.end_time: end,
        cm.bike_id: "",
        cm.duration: trips.duration_seconds,
        cm.origin: trips.origin,
        cm.origin_name: [names.get(int(i), "") for i in trips.origin],
        cm.destination: trips.destination,
        cm.destination_name: [names.get(int(i), "") for i in trips.destination],
        cm.user_type: kind,
        cm.gender: gender,
        cm.birth_year: birth,
    })
    df.to_csv(path, index=False, lineterminator="\n")


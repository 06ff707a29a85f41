"""Parsing of actual-transit data files into validated per-day trip collections.

Two tabular inputs are understood: the canonical trip CSV defined by this
project and the national Ist-Daten daily dump (semicolon separated, German
column names), which is adapted onto the canonical field set. Station
metadata comes from a small `station_id,name,lat,lon` CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import BinaryIO, Iterable

from .errors import EmptyInput, MissingColumns, UnreadableSource

CANONICAL_COLUMNS = [
    "trip_id",
    "operation_day",
    "seq",
    "station_id",
    "station_name",
    "arrival",
    "departure",
    "mode",
    "passthrough",
]

STATION_COLUMNS = ["station_id", "name", "lat", "lon"]

# Ist-Daten columns we rely on; extra columns are ignored.
_SBB_REQUIRED = [
    "BETRIEBSTAG",
    "FAHRT_BEZEICHNER",
    "PRODUKT_ID",
    "BPUIC",
    "HALTESTELLEN_NAME",
]


@dataclass
class IngestWarning:
    message: str
    row: int | None = None
    context: str = ""

    def __str__(self):
        loc = f" (row {self.row})" if self.row is not None else ""
        return f"{self.message}{loc}{' ' + self.context if self.context else ''}"


@dataclass(frozen=True)
class StopEvent:
    station_id: str
    station_name: str
    arrival: datetime | None
    departure: datetime | None
    is_passthrough: bool = False

    def __post_init__(self):
        if self.arrival is None and self.departure is None:
            raise ValueError(f"stop {self.station_id}: neither arrival nor departure")
        if (
            self.arrival is not None
            and self.departure is not None
            and self.departure < self.arrival
        ):
            raise ValueError(f"stop {self.station_id}: departure before arrival")

    @property
    def first_time(self) -> datetime:
        return self.arrival if self.arrival is not None else self.departure

    @property
    def last_time(self) -> datetime:
        return self.departure if self.departure is not None else self.arrival


@dataclass(frozen=True)
class Trip:
    trip_id: str
    operation_day: date
    stops: tuple[StopEvent, ...]
    mode: str = "train"

    def __post_init__(self):
        if len(self.stops) < 2:
            raise ValueError(f"trip {self.trip_id}: fewer than 2 stops")
        prev = None
        for stop in self.stops:
            if prev is not None and stop.first_time < prev:
                raise ValueError(f"trip {self.trip_id}: stop times not non-decreasing")
            prev = stop.last_time


@dataclass
class StationDirectory:
    stations: dict[str, tuple[str, float | None, float | None]] = field(
        default_factory=dict
    )

    def __len__(self):
        return len(self.stations)

    def __contains__(self, station_id):
        return station_id in self.stations

    def name(self, station_id: str) -> str | None:
        entry = self.stations.get(station_id)
        return entry[0] if entry else None

    def coords(self, station_id: str) -> tuple[float | None, float | None]:
        entry = self.stations.get(station_id)
        return (entry[1], entry[2]) if entry else (None, None)


def _truncate_minute(dt: datetime) -> datetime:
    return dt.replace(second=0, microsecond=0)


def _parse_iso_minute(text: str) -> datetime:
    # Accepts YYYY-MM-DDTHH:MM with optional seconds; truncates to the minute.
    return _truncate_minute(datetime.fromisoformat(text))


def _parse_sbb_time(text: str) -> datetime:
    text = text.strip()
    for fmt in ("%d.%m.%Y %H:%M:%S", "%d.%m.%Y %H:%M"):
        try:
            return _truncate_minute(datetime.strptime(text, fmt))
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp: {text!r}")


def _decode(source: BinaryIO | bytes) -> io.StringIO:
    try:
        data = source if isinstance(source, bytes) else source.read()
        if isinstance(data, str):
            return io.StringIO(data)
        return io.StringIO(data.decode("utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableSource(str(exc)) from exc


def parse_actual_data(
    source: BinaryIO | bytes, format: str = "canonical_csv"
) -> tuple[list[Trip], list[IngestWarning]]:
    """Parse a trips file into validated ``Trip`` objects plus warnings.

    ``format`` is ``canonical_csv`` or ``sbb_ist_daten_csv``. Malformed rows
    and trips violating invariants are dropped with a warning; only
    structural problems (unreadable bytes, missing header columns, zero
    valid rows) raise.
    """
    if format == "canonical_csv":
        return _parse_canonical(source)
    if format == "sbb_ist_daten_csv":
        return _parse_sbb(source)
    raise ValueError(f"unknown format: {format}")


def _parse_canonical(source) -> tuple[list[Trip], list[IngestWarning]]:
    text = _decode(source)
    reader = csv.DictReader(text)
    if reader.fieldnames is None:
        raise EmptyInput("no header row")
    missing = set(CANONICAL_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise MissingColumns(missing, reader.fieldnames)

    warnings: list[IngestWarning] = []
    # (trip_id, operation_day) -> {seq: parsed row}; duplicate seq keeps last.
    buckets: dict[tuple[str, date], dict[int, dict]] = {}
    n_rows = 0
    for lineno, row in enumerate(reader, start=2):
        try:
            day = date.fromisoformat(row["operation_day"])
            seq = int(row["seq"])
            arrival = _parse_iso_minute(row["arrival"]) if row["arrival"] else None
            departure = _parse_iso_minute(row["departure"]) if row["departure"] else None
        except (ValueError, KeyError) as exc:
            warnings.append(IngestWarning(f"malformed row: {exc}", row=lineno))
            continue
        key = (row["trip_id"], day)
        bucket = buckets.setdefault(key, {})
        if seq in bucket:
            warnings.append(
                IngestWarning(
                    f"duplicate (trip, seq) row for trip {row['trip_id']} seq {seq}; "
                    "keeping last",
                    row=lineno,
                )
            )
        bucket[seq] = {
            "station_id": row["station_id"],
            "station_name": row["station_name"],
            "arrival": arrival,
            "departure": departure,
            "mode": row["mode"] or "train",
            "passthrough": row["passthrough"].strip().lower() in ("1", "true", "yes"),
            "lineno": lineno,
        }
        n_rows += 1
    if n_rows == 0:
        raise EmptyInput("zero valid rows")
    return _assemble_trips(buckets, warnings)


def _parse_sbb(source) -> tuple[list[Trip], list[IngestWarning]]:
    text = _decode(source)
    reader = csv.DictReader(text, delimiter=";")
    if reader.fieldnames is None:
        raise EmptyInput("no header row")
    missing = set(_SBB_REQUIRED) - set(reader.fieldnames)
    if missing:
        raise MissingColumns(missing, reader.fieldnames)

    warnings: list[IngestWarning] = []
    buckets: dict[tuple[str, date], dict] = {}
    n_rows = 0
    for lineno, row in enumerate(reader, start=2):
        mode = (row.get("PRODUKT_ID") or "").strip().lower()
        if mode != "zug":
            continue  # only train traffic is modelled
        try:
            day = datetime.strptime(row["BETRIEBSTAG"].strip(), "%d.%m.%Y").date()
        except ValueError as exc:
            warnings.append(IngestWarning(f"bad operation day: {exc}", row=lineno))
            continue
        # Actual times preferred over scheduled when present.
        arrival = _pick_sbb_time(row, "AN_PROGNOSE", "ANKUNFTSZEIT", warnings, lineno)
        departure = _pick_sbb_time(row, "AB_PROGNOSE", "ABFAHRTSZEIT", warnings, lineno)
        if arrival is None and departure is None:
            warnings.append(IngestWarning("row without any usable time", row=lineno))
            continue
        passthrough = (row.get("DURCHFAHRT_TF") or "").strip().lower() == "true"
        trip_id = row["FAHRT_BEZEICHNER"].strip()
        key = (trip_id, day)
        bucket = buckets.setdefault(key, {})
        # No sequence column: order by time; duplicate (station, time) keeps last.
        dedup = (row["BPUIC"].strip(), arrival, departure)
        if dedup in bucket:
            warnings.append(
                IngestWarning(
                    f"duplicate stop row for trip {trip_id}; keeping last", row=lineno
                )
            )
        bucket[dedup] = {
            "station_id": row["BPUIC"].strip(),
            "station_name": row["HALTESTELLEN_NAME"].strip(),
            "arrival": arrival,
            "departure": departure,
            "mode": "train",
            "passthrough": passthrough,
            "lineno": lineno,
        }
        n_rows += 1
    if n_rows == 0:
        raise EmptyInput("zero valid train rows")

    # Re-key onto ordinal sequence numbers by time.
    ordered: dict[tuple[str, date], dict[int, dict]] = {}
    for key, bucket in buckets.items():
        rows = sorted(
            bucket.values(),
            key=lambda r: (r["arrival"] or r["departure"], r["departure"] or r["arrival"]),
        )
        ordered[key] = {i: r for i, r in enumerate(rows)}
    return _assemble_trips(ordered, warnings)


def _pick_sbb_time(row, actual_col, scheduled_col, warnings, lineno):
    for col in (actual_col, scheduled_col):
        raw = (row.get(col) or "").strip()
        if raw:
            try:
                return _parse_sbb_time(raw)
            except ValueError:
                warnings.append(
                    IngestWarning(f"bad timestamp in {col}: {raw!r}", row=lineno)
                )
    return None


def _assemble_trips(buckets, warnings) -> tuple[list[Trip], list[IngestWarning]]:
    trips: list[Trip] = []
    for (trip_id, day), rows in sorted(buckets.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        stop_rows = [rows[k] for k in sorted(rows)]
        try:
            stops = tuple(
                StopEvent(
                    station_id=r["station_id"],
                    station_name=r["station_name"],
                    arrival=r["arrival"],
                    departure=r["departure"],
                    is_passthrough=r["passthrough"],
                )
                for r in stop_rows
            )
            trips.append(
                Trip(
                    trip_id=trip_id,
                    operation_day=day,
                    stops=stops,
                    mode=stop_rows[0]["mode"],
                )
            )
        except ValueError as exc:
            warnings.append(
                IngestWarning(
                    f"trip {trip_id} on {day} excluded: {exc}",
                    row=stop_rows[0].get("lineno"),
                )
            )
    return trips, warnings


def load_station_directory(source: BinaryIO | bytes) -> tuple[StationDirectory, list[IngestWarning]]:
    """Load the station metadata CSV (`station_id,name,lat,lon`)."""
    text = _decode(source)
    reader = csv.DictReader(text)
    if reader.fieldnames is None:
        raise EmptyInput("no header row")
    missing = set(STATION_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise MissingColumns(missing, reader.fieldnames)
    directory = StationDirectory()
    warnings: list[IngestWarning] = []
    n = 0
    for lineno, row in enumerate(reader, start=2):
        sid = row["station_id"].strip()
        if not sid:
            warnings.append(IngestWarning("empty station_id", row=lineno))
            continue
        if sid in directory.stations:
            warnings.append(
                IngestWarning(f"duplicate station_id {sid}; keeping first", row=lineno)
            )
            continue
        try:
            lat = float(row["lat"]) if row["lat"].strip() else None
            lon = float(row["lon"]) if row["lon"].strip() else None
        except ValueError:
            warnings.append(IngestWarning(f"bad coordinates for {sid}", row=lineno))
            lat = lon = None
        directory.stations[sid] = (row["name"].strip(), lat, lon)
        n += 1
    if n == 0:
        raise EmptyInput("zero valid station rows")
    return directory, warnings


def group_by_operation_day(trips: Iterable[Trip]) -> dict[date, list[Trip]]:
    """Bucket trips under their operation day key (not the calendar day of
    individual stops: a post-midnight trip stays with the day its service
    started)."""
    out: dict[date, list[Trip]] = {}
    for trip in trips:
        out.setdefault(trip.operation_day, []).append(trip)
    return out


def trips_to_canonical_csv(trips: Iterable[Trip]) -> str:
    """Serialize trips to the canonical CSV format (round-trips with
    ``parse_actual_data(format='canonical_csv')``)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CANONICAL_COLUMNS)
    for trip in trips:
        for seq, stop in enumerate(trip.stops):
            writer.writerow(
                [
                    trip.trip_id,
                    trip.operation_day.isoformat(),
                    seq,
                    stop.station_id,
                    stop.station_name,
                    stop.arrival.strftime("%Y-%m-%dT%H:%M") if stop.arrival else "",
                    stop.departure.strftime("%Y-%m-%dT%H:%M") if stop.departure else "",
                    trip.mode,
                    "true" if stop.is_passthrough else "false",
                ]
            )
    return buf.getvalue()

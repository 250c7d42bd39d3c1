"""Streaming ingestion of delimited taxi trip and fare files.

The canonical input format is 2013 NYC TLC-style delimited text: one file of
trip legs (endpoints, timestamps, distance) and one of fares (amounts, tip,
payment).  A declarative column mapping adapts other cities' exports without
code changes.  Dirty rows are never silently dropped: every raw data row is
either accepted into an emitted TripRecord or rejected with a reason code,
so accepted + rejected always equals rows read.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator
from zoneinfo import ZoneInfo

from .errors import HeaderError
from .geo import KM_PER_MILE
from .money import from_cents, parse_dollars

# Reject reason codes (parse stage)
BAD_COORDINATE = "bad_coordinate"
BAD_TIMESTAMP = "bad_timestamp"
BAD_MONEY = "bad_money"
BAD_DISTANCE = "bad_distance"
MISSING_FIELD = "missing_field"
# Join stage
AMBIGUOUS_JOIN = "ambiguous_join"
UNMATCHED_TRIP = "unmatched_trip"
UNMATCHED_FARE = "unmatched_fare"
# Validation stage
TIME_ORDER = "time_order"
OUT_OF_BOX = "out_of_box"
BAD_AMOUNTS = "bad_amounts"
NEGATIVE_DISTANCE = "negative_distance"

PAYMENT_CARD = "card"
PAYMENT_CASH = "cash"
PAYMENT_OTHER = "other"

TRIP_FIELDS = ("pickup_time", "dropoff_time", "pickup_lat", "pickup_lon",
               "dropoff_lat", "dropoff_lon", "trip_distance")
FARE_FIELDS = ("payment_type", "fare_amount", "tip_amount", "total_amount")


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def contains(self, lat: float, lon: float) -> bool:
        return self.min_lat <= lat <= self.max_lat and self.min_lon <= lon <= self.max_lon


# Default New York metro box used to sanity-check endpoints at validation.
NYC_BOX = BoundingBox(min_lat=40.45, max_lat=41.05, min_lon=-74.30, max_lon=-73.60)


@dataclass(frozen=True)
class IngestConfig:
    """Declarative mapping from canonical fields to source columns.

    `join_key` lists canonical fields present in both files that identify a
    trip (the source data does not document its own join key, so it is
    configurable).
    """

    trip_columns: dict[str, str]
    fare_columns: dict[str, str]
    join_key: tuple[str, ...] = ("medallion", "hack_license", "pickup_time")
    delimiter: str = ","
    distance_unit: str = "miles"
    source_tz: str = "UTC"
    payment_map: dict[str, str] = field(default_factory=lambda: {"CRD": PAYMENT_CARD, "CSH": PAYMENT_CASH})
    box: BoundingBox = NYC_BOX

    @classmethod
    def nyc_tlc_2013(cls, **overrides) -> "IngestConfig":
        """Column mapping for the 2013 NYC TLC trip_data / trip_fare layout."""
        cfg = cls(
            trip_columns={
                "medallion": "medallion",
                "hack_license": "hack_license",
                "pickup_time": "pickup_datetime",
                "dropoff_time": "dropoff_datetime",
                "pickup_lat": "pickup_latitude",
                "pickup_lon": "pickup_longitude",
                "dropoff_lat": "dropoff_latitude",
                "dropoff_lon": "dropoff_longitude",
                "trip_distance": "trip_distance",
            },
            fare_columns={
                "medallion": "medallion",
                "hack_license": "hack_license",
                "pickup_time": "pickup_datetime",
                "payment_type": "payment_type",
                "fare_amount": "fare_amount",
                "tip_amount": "tip_amount",
                "total_amount": "total_amount",
            },
        )
        return replace(cfg, **overrides) if overrides else cfg

    @classmethod
    def from_json(cls, path: str | Path) -> "IngestConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if "box" in raw:
            raw["box"] = BoundingBox(**raw["box"])
        if "join_key" in raw:
            raw["join_key"] = tuple(raw["join_key"])
        return cls(**raw)


@dataclass(frozen=True)
class TripRecord:
    """One canonical taxi journey (coordinates WGS84, distance km, money in
    integer cents)."""

    trip_id: str
    pickup_time: datetime
    dropoff_time: datetime
    pickup_lat: float
    pickup_lon: float
    dropoff_lat: float
    dropoff_lon: float
    trip_distance_km: float
    fare_cents: int
    tip_cents: int
    total_cents: int
    payment_type: str

    @property
    def fare_amount(self) -> float:
        return from_cents(self.fare_cents)

    @property
    def tip_amount(self) -> float:
        return from_cents(self.tip_cents)

    @property
    def total_amount(self) -> float:
        return from_cents(self.total_cents)

    @property
    def duration_min(self) -> float:
        return (self.dropoff_time - self.pickup_time).total_seconds() / 60.0


@dataclass
class IngestReport:
    """Row accounting for an ingestion; merges associatively across chunks."""

    rows_read: int = 0
    rows_accepted: int = 0
    rows_rejected: int = 0
    rejection_reasons: Counter = field(default_factory=Counter)

    def accept(self, n: int = 1) -> None:
        self.rows_accepted += n

    def reject(self, reason: str, n: int = 1) -> None:
        self.rows_rejected += n
        self.rejection_reasons[reason] += n

    def merge(self, other: "IngestReport") -> None:
        self.rows_read += other.rows_read
        self.rows_accepted += other.rows_accepted
        self.rows_rejected += other.rows_rejected
        self.rejection_reasons.update(other.rejection_reasons)

    def check_conservation(self) -> bool:
        return self.rows_read == self.rows_accepted + self.rows_rejected


RejectSink = Callable[[int, str, str], None]


class RejectLog:
    """Tab-separated reject log: line_number, reason, raw_row."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")

    def __call__(self, line_number: int, reason: str, raw_row: str) -> None:
        self._fh.write(f"{line_number}\t{reason}\t{raw_row}\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RejectLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True)
class ParsedRow:
    """A parsed source row plus enough provenance to log or reject it later."""

    line_number: int
    raw: str
    values: dict


def _parse_timestamp(text: str, tz: ZoneInfo) -> datetime:
    dt = datetime.fromisoformat(text.strip())
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=tz)
    return dt.astimezone(timezone.utc)


def _field_parsers(config: IngestConfig) -> dict[str, Callable[[str], object]]:
    tz = ZoneInfo(config.source_tz)
    to_km = KM_PER_MILE if config.distance_unit == "miles" else 1.0

    def coord(text: str) -> float:
        return float(text)

    def distance(text: str) -> float:
        return float(text) * to_km

    def payment(text: str) -> str:
        return config.payment_map.get(text.strip().upper(), PAYMENT_OTHER)

    ts = lambda text: _parse_timestamp(text, tz)
    return {
        "pickup_time": ts,
        "dropoff_time": ts,
        "pickup_lat": coord,
        "pickup_lon": coord,
        "dropoff_lat": coord,
        "dropoff_lon": coord,
        "trip_distance": distance,
        "fare_amount": parse_dollars,
        "tip_amount": parse_dollars,
        "total_amount": parse_dollars,
        "payment_type": payment,
    }


_PARSE_REASONS = {
    "pickup_time": BAD_TIMESTAMP,
    "dropoff_time": BAD_TIMESTAMP,
    "pickup_lat": BAD_COORDINATE,
    "pickup_lon": BAD_COORDINATE,
    "dropoff_lat": BAD_COORDINATE,
    "dropoff_lon": BAD_COORDINATE,
    "trip_distance": BAD_DISTANCE,
    "fare_amount": BAD_MONEY,
    "tip_amount": BAD_MONEY,
    "total_amount": BAD_MONEY,
}


def _parse_delimited(
    fh: io.TextIOBase,
    columns: dict[str, str],
    config: IngestConfig,
    report: IngestReport,
    rejects: RejectSink | None,
    first_line_number: int = 2,
) -> Iterator[ParsedRow]:
    """Core row parser shared by the trip and fare readers.

    Yields rows in file order; malformed rows go to the reject sink and the
    report, never silently away.  Accept counts are left to the caller (a
    parsed row may still be rejected at join or validation).
    """
    reader = csv.reader(fh, delimiter=config.delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise HeaderError("file is empty, no header row")
    positions = {}
    for canonical, source in columns.items():
        if source not in header:
            raise HeaderError(f"header missing mapped column {source!r}")
        positions[canonical] = header.index(source)
    parsers = _field_parsers(config)

    for offset, cells in enumerate(reader):
        line_number = first_line_number + offset
        raw = config.delimiter.join(cells)
        report.rows_read += 1
        values: dict = {}
        failure: str | None = None
        for canonical, pos in positions.items():
            text = cells[pos].strip() if pos < len(cells) else ""
            if text == "":
                failure = MISSING_FIELD
                break
            parser = parsers.get(canonical)
            if parser is None:
                values[canonical] = text
                continue
            try:
                values[canonical] = parser(text)
            except (ValueError, OverflowError):
                failure = _PARSE_REASONS.get(canonical, MISSING_FIELD)
                break
        if failure is not None:
            report.reject(failure)
            if rejects is not None:
                rejects(line_number, failure, raw)
            continue
        yield ParsedRow(line_number, raw, values)


def parse_trip_file(
    path: str | Path,
    config: IngestConfig,
    report: IngestReport | None = None,
    rejects: RejectSink | None = None,
) -> Iterator[ParsedRow]:
    """Stream parsed trip rows from a delimited file with a header row."""
    report = report if report is not None else IngestReport()
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        yield from _parse_delimited(fh, config.trip_columns, config, report, rejects)


def parse_fare_file(
    path: str | Path,
    config: IngestConfig,
    report: IngestReport | None = None,
    rejects: RejectSink | None = None,
) -> Iterator[ParsedRow]:
    """Stream parsed fare rows from a delimited file with a header row."""
    report = report if report is not None else IngestReport()
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        yield from _parse_delimited(fh, config.fare_columns, config, report, rejects)


def _join_key_of(values: dict, config: IngestConfig):
    return tuple(values[k] for k in config.join_key)


def _make_record(trip: ParsedRow, fare: ParsedRow, config: IngestConfig) -> TripRecord:
    t, f = trip.values, fare.values
    key = _join_key_of(t, config)
    trip_id = ":".join(str(part) for part in key)
    return TripRecord(
        trip_id=trip_id,
        pickup_time=t["pickup_time"],
        dropoff_time=t["dropoff_time"],
        pickup_lat=t["pickup_lat"],
        pickup_lon=t["pickup_lon"],
        dropoff_lat=t["dropoff_lat"],
        dropoff_lon=t["dropoff_lon"],
        trip_distance_km=t["trip_distance"],
        fare_cents=f["fare_amount"],
        tip_cents=f["tip_amount"],
        total_cents=f["total_amount"],
        payment_type=f.get("payment_type", PAYMENT_OTHER),
    )


def join_fares(
    trips: Iterable[ParsedRow],
    fares: Iterable[ParsedRow],
    config: IngestConfig,
    report: IngestReport,
    trip_rejects: RejectSink | None = None,
    fare_rejects: RejectSink | None = None,
) -> Iterator[tuple[TripRecord, ParsedRow, ParsedRow]]:
    """Join trip rows to fare rows on the configured key.

    Emits one (record, trip_row, fare_row) per uniquely matched pair, in trip
    file order.  Duplicate keys on either side reject every row involved with
    "ambiguous_join"; unmatched rows are rejected and counted.  Accept
    bookkeeping is the caller's (validation may still reject the record).
    """
    trip_rows = list(trips)
    fare_rows = list(fares)

    trip_count: Counter = Counter(_join_key_of(r.values, config) for r in trip_rows)
    fare_count: Counter = Counter(_join_key_of(r.values, config) for r in fare_rows)
    ambiguous = {k for k, n in trip_count.items() if n > 1} | {k for k, n in fare_count.items() if n > 1}

    fare_by_key: dict = {}
    for row in fare_rows:
        key = _join_key_of(row.values, config)
        if key in ambiguous:
            report.reject(AMBIGUOUS_JOIN)
            if fare_rejects is not None:
                fare_rejects(row.line_number, AMBIGUOUS_JOIN, row.raw)
        else:
            fare_by_key[key] = row

    matched_fares = set()
    for row in trip_rows:
        key = _join_key_of(row.values, config)
        if key in ambiguous:
            report.reject(AMBIGUOUS_JOIN)
            if trip_rejects is not None:
                trip_rejects(row.line_number, AMBIGUOUS_JOIN, row.raw)
            continue
        fare = fare_by_key.get(key)
        if fare is None:
            report.reject(UNMATCHED_TRIP)
            if trip_rejects is not None:
                trip_rejects(row.line_number, UNMATCHED_TRIP, row.raw)
            continue
        matched_fares.add(key)
        yield _make_record(row, fare, config), row, fare

    for key, row in fare_by_key.items():
        if key not in matched_fares:
            report.reject(UNMATCHED_FARE)
            if fare_rejects is not None:
                fare_rejects(row.line_number, UNMATCHED_FARE, row.raw)


def validate_record(rec: TripRecord, box: BoundingBox) -> str | None:
    """Check TripRecord invariants; returns a reject reason or None to accept.

    Total function: never raises.
    """
    if rec.dropoff_time < rec.pickup_time:
        return TIME_ORDER
    if not (box.contains(rec.pickup_lat, rec.pickup_lon) and box.contains(rec.dropoff_lat, rec.dropoff_lon)):
        return OUT_OF_BOX
    if rec.fare_cents < 0 or rec.tip_cents < 0 or rec.total_cents < rec.fare_cents:
        return BAD_AMOUNTS
    if rec.trip_distance_km < 0:
        return NEGATIVE_DISTANCE
    return None


@dataclass
class IngestResult:
    records: list[TripRecord]
    report: IngestReport


def ingest_files(
    trip_path: str | Path,
    fare_path: str | Path,
    config: IngestConfig,
    reject_dir: str | Path | None = None,
) -> IngestResult:
    """Full pipeline: parse both files, join, validate.

    The report accounts in raw-row units: a record that survives counts both
    of its source rows as accepted; a record rejected at validation rejects
    both rows under the validation reason.  When `reject_dir` is given,
    per-file reject logs `<name>.rejects.tsv` are written there.
    """
    report = IngestReport()
    trip_log = fare_log = None
    try:
        if reject_dir is not None:
            reject_dir = Path(reject_dir)
            reject_dir.mkdir(parents=True, exist_ok=True)
            trip_log = RejectLog(reject_dir / (Path(trip_path).name + ".rejects.tsv"))
            fare_log = RejectLog(reject_dir / (Path(fare_path).name + ".rejects.tsv"))

        trips = parse_trip_file(trip_path, config, report, trip_log)
        fares = parse_fare_file(fare_path, config, report, fare_log)
        records: list[TripRecord] = []
        for record, trip_row, fare_row in join_fares(trips, fares, config, report, trip_log, fare_log):
            reason = validate_record(record, config.box)
            if reason is None:
                report.accept(2)
                records.append(record)
            else:
                report.reject(reason, 2)
                if trip_log is not None:
                    trip_log(trip_row.line_number, reason, trip_row.raw)
                if fare_log is not None:
                    fare_log(fare_row.line_number, reason, fare_row.raw)
        return IngestResult(records=records, report=report)
    finally:
        for log in (trip_log, fare_log):
            if log is not None:
                log.close()

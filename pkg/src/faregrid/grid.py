"""Parametric geographic grid and origin-destination fare aggregation.

Coordinates are mapped to zero-based (row, col) cells via the local
equirectangular projection anchored at the grid's southwest corner.  Trips
are bucketed per (origin cell, destination cell) pair; each bucket keeps
exact integer-cent sums so means are reproducible to the cent and buckets
merge associatively under partition-and-merge.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .errors import OutOfGridError
from .geo import local_offset_m, offset_to_latlon
from .ingest import TripRecord
from .money import from_cents

SNAPSHOT_MAGIC = "faregrid-od-index"
SNAPSHOT_VERSION = 1


class CellIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GridSpec:
    """Geographic grid: `n_rows` x `n_cols` square cells of `cell_size_m` meters,
    anchored at the southwest corner (`anchor_lat`, `anchor_lon`)."""

    anchor_lat: float
    anchor_lon: float
    cell_size_m: float
    n_rows: int
    n_cols: int

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise ValueError("grid dimensions must be positive")

    def cell_of(self, lat: float, lon: float) -> CellIndex:
        """Map a coordinate to its cell; boundary points belong to the
        higher-index cell (floor semantics).

        Raises OutOfGridError outside the grid.
        """
        east, north = local_offset_m(self.anchor_lat, self.anchor_lon, lat, lon)
        row = math.floor(north / self.cell_size_m)
        col = math.floor(east / self.cell_size_m)
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise OutOfGridError(f"({lat:.6f}, {lon:.6f}) outside {self.n_rows}x{self.n_cols} grid")
        return CellIndex(row, col)

    def contains(self, lat: float, lon: float) -> bool:
        try:
            self.cell_of(lat, lon)
            return True
        except OutOfGridError:
            return False

    def cell_center(self, cell: CellIndex) -> tuple[float, float]:
        east = (cell.col + 0.5) * self.cell_size_m
        north = (cell.row + 0.5) * self.cell_size_m
        return offset_to_latlon(self.anchor_lat, self.anchor_lon, east, north)

    def extent(self) -> tuple[float, float, float, float]:
        """(south, west, north, east) bounding coordinates of the grid."""
        north_lat, east_lon = offset_to_latlon(
            self.anchor_lat, self.anchor_lon,
            self.n_cols * self.cell_size_m, self.n_rows * self.cell_size_m,
        )
        return self.anchor_lat, self.anchor_lon, north_lat, east_lon


# 30 m cells for fare lookup (fine-grained, block sized); 100 m cells for
# area-level analyses.  Both cover the same 12 km x 12 km extent anchored at
# the southwest corner of the default ingest bounding box.
APP_GRID = GridSpec(anchor_lat=40.60, anchor_lon=-74.05, cell_size_m=30.0, n_rows=400, n_cols=400)
ANALYSIS_GRID = GridSpec(anchor_lat=40.60, anchor_lon=-74.05, cell_size_m=100.0, n_rows=120, n_cols=120)

GRID_PRESETS = {"app": APP_GRID, "analysis": ANALYSIS_GRID}


def cell_of(lat: float, lon: float, spec: GridSpec) -> CellIndex:
    return spec.cell_of(lat, lon)


@dataclass(frozen=True)
class CellRect:
    """Rectangular block of cells, used to pin an analysis region."""

    row0: int
    col0: int
    n_rows: int
    n_cols: int

    def __post_init__(self):
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise ValueError("region dimensions must be positive")

    def __len__(self) -> int:
        return self.n_rows * self.n_cols

    def __contains__(self, cell: CellIndex) -> bool:
        return (self.row0 <= cell.row < self.row0 + self.n_rows
                and self.col0 <= cell.col < self.col0 + self.n_cols)

    def cells(self) -> Iterator[CellIndex]:
        for row in range(self.row0, self.row0 + self.n_rows):
            for col in range(self.col0, self.col0 + self.n_cols):
                yield CellIndex(row, col)


@dataclass
class _Bucket:
    """Exact accumulator for one OD pair."""

    trip_count: int = 0
    total_cents: int = 0
    distance_km: float = 0.0
    duration_min: float = 0.0

    def add(self, total_cents: int, distance_km: float, duration_min: float) -> None:
        self.trip_count += 1
        self.total_cents += total_cents
        self.distance_km += distance_km
        self.duration_min += duration_min

    def merge(self, other: "_Bucket") -> None:
        self.trip_count += other.trip_count
        self.total_cents += other.total_cents
        self.distance_km += other.distance_km
        self.duration_min += other.duration_min


@dataclass(frozen=True)
class ODStats:
    """Aggregate fare statistics for one (origin, destination) cell pair."""

    origin: CellIndex
    destination: CellIndex
    trip_count: int
    mean_total: float
    mean_distance: float
    mean_duration: float


@dataclass
class OriginSummary:
    """All outgoing trips from one origin cell, across destinations."""

    origin: CellIndex
    trip_count: int
    mean_total: float
    mean_distance: float
    mean_duration: float
    winner_votes: Counter = field(default_factory=Counter)


class ODIndex:
    """Origin-destination fare index over a fixed grid.

    Build with add_record / merge, then treat as frozen: reads are pure and
    safe for concurrent use.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self._buckets: dict[tuple[CellIndex, CellIndex], _Bucket] = {}
        self.skipped_out_of_grid = 0
        self.meta: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self._buckets)

    @property
    def trip_count(self) -> int:
        return sum(b.trip_count for b in self._buckets.values())

    def add_record(self, rec: TripRecord) -> bool:
        """Bucket one validated record; returns False (and counts it) when
        either endpoint is off-grid."""
        try:
            o = self.spec.cell_of(rec.pickup_lat, rec.pickup_lon)
            d = self.spec.cell_of(rec.dropoff_lat, rec.dropoff_lon)
        except OutOfGridError:
            self.skipped_out_of_grid += 1
            return False
        bucket = self._buckets.get((o, d))
        if bucket is None:
            bucket = self._buckets[(o, d)] = _Bucket()
        bucket.add(rec.total_cents, rec.trip_distance_km, rec.duration_min)
        return True

    def add_records(self, records: Iterable[TripRecord]) -> None:
        for rec in records:
            self.add_record(rec)

    def merge(self, other: "ODIndex") -> None:
        if other.spec != self.spec:
            raise ValueError("cannot merge OD indexes with different grids")
        for key, bucket in other._buckets.items():
            mine = self._buckets.get(key)
            if mine is None:
                self._buckets[key] = _Bucket(
                    bucket.trip_count, bucket.total_cents, bucket.distance_km, bucket.duration_min
                )
            else:
                mine.merge(bucket)
        self.skipped_out_of_grid += other.skipped_out_of_grid

    def bucket(self, origin: CellIndex, destination: CellIndex) -> _Bucket | None:
        """Raw sums for one route (trip_count, total_cents, distance_km,
        duration_min), or None when the route has no trips."""
        return self._buckets.get((origin, destination))

    def stats(self, origin: CellIndex, destination: CellIndex) -> ODStats | None:
        bucket = self._buckets.get((origin, destination))
        if bucket is None:
            return None
        n = bucket.trip_count
        return ODStats(
            origin=origin,
            destination=destination,
            trip_count=n,
            mean_total=from_cents(bucket.total_cents) / n,
            mean_distance=bucket.distance_km / n,
            mean_duration=bucket.duration_min / n,
        )

    def items(self) -> Iterator[ODStats]:
        for origin, destination in sorted(self._buckets):
            yield self.stats(origin, destination)

    def origins(self) -> list[CellIndex]:
        return sorted({o for o, _ in self._buckets})

    def save(self, path: str | Path) -> None:
        """Write a versioned tab-separated snapshot (sums, not means, so a
        reloaded index merges and aggregates exactly like the original)."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(f"# {SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}\n")
            s = self.spec
            fh.write(f"# grid\t{s.anchor_lat!r}\t{s.anchor_lon!r}\t{s.cell_size_m!r}\t{s.n_rows}\t{s.n_cols}\n")
            fh.write(f"# skipped_out_of_grid\t{self.skipped_out_of_grid}\n")
            for key in sorted(self.meta):
                fh.write(f"# meta\t{key}\t{self.meta[key]}\n")
            fh.write("o_row\to_col\td_row\td_col\ttrip_count\ttotal_cents\tdistance_km\tduration_min\n")
            for (o, d) in sorted(self._buckets):
                b = self._buckets[(o, d)]
                fh.write(
                    f"{o.row}\t{o.col}\t{d.row}\t{d.col}\t{b.trip_count}\t{b.total_cents}\t"
                    f"{b.distance_km!r}\t{b.duration_min!r}\n"
                )

    @classmethod
    def load(cls, path: str | Path) -> "ODIndex":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline().strip()
            if not first.startswith(f"# {SNAPSHOT_MAGIC} v"):
                raise ValueError(f"{path}: not an OD index snapshot")
            version = int(first.rsplit("v", 1)[1])
            if version != SNAPSHOT_VERSION:
                raise ValueError(f"{path}: unsupported snapshot version {version}")
            spec = None
            skipped = 0
            meta: dict[str, str] = {}
            line = fh.readline()
            while line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if parts[0] == "grid":
                    spec = GridSpec(float(parts[1]), float(parts[2]), float(parts[3]), int(parts[4]), int(parts[5]))
                elif parts[0] == "skipped_out_of_grid":
                    skipped = int(parts[1])
                elif parts[0] == "meta":
                    meta[parts[1]] = parts[2]
                line = fh.readline()
            if spec is None:
                raise ValueError(f"{path}: snapshot missing grid header")
            index = cls(spec)
            index.skipped_out_of_grid = skipped
            index.meta = meta
            # `line` currently holds the column header row
            for line in fh:
                p = line.rstrip("\n").split("\t")
                key = (CellIndex(int(p[0]), int(p[1])), CellIndex(int(p[2]), int(p[3])))
                index._buckets[key] = _Bucket(int(p[4]), int(p[5]), float(p[6]), float(p[7]))
            return index


def aggregate_od_stats(records: Iterable[TripRecord], spec: GridSpec) -> ODIndex:
    """Bucket validated records into an OD index; off-grid trips are skipped
    and counted on the index."""
    index = ODIndex(spec)
    index.add_records(records)
    return index


def area_outgoing_stats(od: ODIndex, origin: CellIndex) -> OriginSummary:
    """Aggregate every destination bucket for one origin cell.

    An origin with no trips yields an explicit empty summary (count 0).
    """
    count = 0
    total_cents = 0
    distance = 0.0
    duration = 0.0
    for (o, _d), bucket in od._buckets.items():
        if o != origin:
            continue
        count += bucket.trip_count
        total_cents += bucket.total_cents
        distance += bucket.distance_km
        duration += bucket.duration_min
    if count == 0:
        return OriginSummary(origin, 0, 0.0, 0.0, 0.0)
    return OriginSummary(
        origin, count, from_cents(total_cents) / count, distance / count, duration / count
    )

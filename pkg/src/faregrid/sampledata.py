"""Deterministic sample corpus builder.

Generates every bundled dataset the analyses and tests run on: a month of
taxi trip/fare files with injected dirty rows, a query log, week-long price
replay logs (one 800-route set and two 5-route controlled-experiment sets),
the 840-area feature table, venue files, and a gazetteer.  All randomness
comes from seeded generator streams, so the same seed reproduces identical
bytes.  After writing, the builder re-reads everything through the real
pipeline and asserts the statistical properties the fixtures are supposed
to carry; a corpus that fails calibration is never left on disk silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from . import fares, ingest, predict, savings, surge
from .geo import KM_PER_MILE, haversine_km
from .grid import ANALYSIS_GRID, CellIndex, CellRect, GridSpec
from .money import fmt_dollars

DATA_SEED = 20140908

# Analysis region: 840 cells of the 100 m grid.
REGION = CellRect(row0=20, col0=20, n_rows=28, n_cols=30)

N_ROUTES = 800
N_EMPTY_CELLS = 40
N_SURGING = 588  # exactly 70% of the region's 840 cells

LOCAL_TZ = "America/New_York"
WEEK_START = datetime(2014, 9, 8, 0, 0, tzinfo=ZoneInfo(LOCAL_TZ))  # a Monday
N_WEEKS = 4

# Surge size distribution: multiplier = 1 + k/10, k drawn from this table.
K_WEIGHTS = np.array([0.35, 0.2, 0.12, 0.09, 0.07, 0.05, 0.04, 0.03,
                      0.02, 0.015, 0.01, 0.005])

# Base tariff used when synthesizing competitor prices for fixtures.
FIXTURE_CARD = fares.RateCard(per_km=fares.UBERX_NYC.per_km,
                              per_minute=fares.UBERX_NYC.per_minute,
                              minimum_fare=5.0)

# Stream ids: one independent generator per artifact.
_S_LAYOUT, _S_FEATURES, _S_ROUTES, _S_SURGE, _S_MULT = 1, 2, 3, 4, 5
_S_QUERIES, _S_TRIPS, _S_EXPERIMENT, _S_VENUES = 6, 7, 8, 9


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def query_weights() -> np.ndarray:
    """Analytic hour-of-week demand shape behind query and surge timing."""
    w = np.empty(savings.HOURS_PER_WEEK)
    for d in range(7):
        for h in range(24):
            v = 0.5
            if 7 <= h < 10:
                v += 2.0 if d < 5 else 0.5
            if 12 <= h < 14:
                v += 1.0
            if 17 <= h < 23:
                v += 3.0 if d < 5 else 2.0
            if h >= 23 or h < 3:
                v += 2.5 if d in (4, 5) else 0.3
            w[d * 24 + h] = v
    return w


@dataclass(frozen=True)
class CorpusPaths:
    root: Path

    @property
    def trips(self) -> Path: return self.root / "trips.csv"
    @property
    def fares(self) -> Path: return self.root / "fares.csv"
    @property
    def column_map(self) -> Path: return self.root / "column_map.json"
    @property
    def queries(self) -> Path: return self.root / "queries.jsonl"
    @property
    def replay_weekly(self) -> Path: return self.root / "replay_weekly.csv"
    @property
    def routes_weekly(self) -> Path: return self.root / "routes_weekly.csv"
    @property
    def replay_fixed_origin(self) -> Path: return self.root / "replay_fixed_origin.csv"
    @property
    def routes_fixed_origin(self) -> Path: return self.root / "routes_fixed_origin.csv"
    @property
    def replay_fixed_destination(self) -> Path: return self.root / "replay_fixed_destination.csv"
    @property
    def routes_fixed_destination(self) -> Path: return self.root / "routes_fixed_destination.csv"
    @property
    def area_features(self) -> Path: return self.root / "area_features.csv"
    @property
    def venues(self) -> Path: return self.root / "venues.csv"
    @property
    def checkins(self) -> Path: return self.root / "checkins.csv"
    @property
    def gazetteer(self) -> Path: return self.root / "gazetteer.csv"
    @property
    def manifest(self) -> Path: return self.root / "MANIFEST.json"


def _jitter_in_cell(spec: GridSpec, cell: CellIndex, rng: np.random.Generator,
                    max_frac: float = 0.4) -> tuple[float, float]:
    """Coordinate inside the cell: center plus jitter bounded off the edges."""
    lat, lon = spec.cell_center(cell)
    dlat = (rng.uniform(-max_frac, max_frac) * spec.cell_size_m) / 111_320.0
    dlon = (rng.uniform(-max_frac, max_frac) * spec.cell_size_m) / (
        111_320.0 * math.cos(math.radians(spec.anchor_lat)))
    return lat + dlat, lon + dlon


def _route_base_cents(origin: tuple[float, float], dest: tuple[float, float]) -> int:
    distance = haversine_km(origin[0], origin[1], dest[0], dest[1]) * 1.3
    duration = distance / 18.0 * 60.0
    return fares.estimate_uber_base_cents(distance, duration, FIXTURE_CARD)


def _symmetric_range(price_cents: int) -> tuple[int, int]:
    spread = int(round(price_cents * 0.05))
    return price_cents - spread, price_cents + spread


# ---------------------------------------------------------------------------
# Layout: which cells hold routes, which surge, and how strongly.

@dataclass(frozen=True)
class _Layout:
    cells: list[CellIndex]                    # all 840, row-major
    empty: set[CellIndex]                     # no routes at all
    routed: list[CellIndex]                   # 800, row-major
    surgers: set[CellIndex]                   # 588 of the routed
    demand: dict[CellIndex, float]            # demand score per cell
    excess: dict[CellIndex, float]            # designed avg multiplier - 1
    features: dict[CellIndex, tuple[int, int, int, int]]


def _build_layout(seed: int) -> _Layout:
    cells = list(REGION.cells())
    n = len(cells)

    rng_f = _rng(seed, _S_FEATURES)
    g = rng_f.random(n)
    e1, e2, e3, e4 = (rng_f.random(n) for _ in range(4))
    yellow = np.rint(40 + 360 * (0.62 * g + 0.38 * e1)).astype(int)
    places = np.rint(8 + 90 * (0.58 * g + 0.42 * e2)).astype(int)
    checkins = np.rint(30 + 1100 * (0.45 * g + 0.55 * e3)).astype(int)
    travel = np.minimum(np.rint(14 * (0.08 * g + 0.92 * e4)).astype(int), places)

    def ranks(v: np.ndarray) -> np.ndarray:
        order = np.argsort(v, kind="mergesort")
        r = np.empty(n)
        r[order] = np.arange(n)
        return r / (n - 1)

    # Demand score behind surge: a rank blend of the observable counts, so
    # the signal is recoverable from them jointly but no count alone is it.
    z_arr = 0.45 * ranks(yellow) + 0.45 * ranks(places) + 0.10 * ranks(checkins)

    rng_l = _rng(seed, _S_LAYOUT)
    empty_idx = set(rng_l.choice(n, size=N_EMPTY_CELLS, replace=False).tolist())
    empty = {cells[i] for i in empty_idx}
    routed = [c for i, c in enumerate(cells) if i not in empty_idx]

    demand = {c: float(z_arr[i]) for i, c in enumerate(cells)}
    by_z = sorted(routed, key=lambda c: (-demand[c], c))
    surgers = set(by_z[:N_SURGING])

    # Average-multiplier excess: convex in the demand rank, which keeps any
    # single count's linear correlation with the target well below what the
    # joint model can reach.
    asc = sorted(surgers, key=lambda c: (demand[c], c))
    excess = {c: 0.02 + 0.15 * (i / (len(asc) - 1)) ** 2.5
              for i, c in enumerate(asc)}

    features = {c: (int(yellow[i]), int(places[i]), int(checkins[i]), int(travel[i]))
                for i, c in enumerate(cells)}
    return _Layout(cells=cells, empty=empty, routed=routed, surgers=surgers,
                   demand=demand, excess=excess, features=features)


# ---------------------------------------------------------------------------
# Weekly replay: 800 routes x 168 hourly quotes.

def _build_weekly(paths: CorpusPaths, layout: _Layout, seed: int,
                  weights: np.ndarray) -> dict[CellIndex, float]:
    """Write routes_weekly + replay_weekly; returns avg multiplier per cell.

    Each surging route gets a fixed surge budget (sum of multiplier steps
    over the week) dictated by its designed excess, spent on the busiest
    hours first with a per-route jitter in the hour order.  The budget
    pins the weekly average, so targets carry no realization noise.
    """
    rng_routes = _rng(seed, _S_ROUTES)
    rng_surge = _rng(seed, _S_SURGE)
    rng_mult = _rng(seed, _S_MULT)

    spec = ANALYSIS_GRID
    region_cells = layout.cells
    routes: list[surge.Route] = []
    avg_by_cell: dict[CellIndex, float] = {}
    log = surge.ReplayLog()

    for i, cell in enumerate(layout.routed):
        route_id = f"r{i:04d}"
        origin = spec.cell_center(cell)
        while True:
            dest_cell = region_cells[int(rng_routes.integers(len(region_cells)))]
            if abs(dest_cell.row - cell.row) + abs(dest_cell.col - cell.col) >= 5:
                break
        dest = spec.cell_center(dest_cell)
        routes.append(surge.Route(route_id=route_id, origin=origin, destination=dest))
        base = _route_base_cents(origin, dest)

        # Streams advance for every route so layout changes stay local.
        hour_jitter = rng_surge.uniform(0.5, 1.0, savings.HOURS_PER_WEEK)
        ks_drawn = 1 + rng_mult.choice(len(K_WEIGHTS), size=savings.HOURS_PER_WEEK,
                                       p=K_WEIGHTS)
        k_by_hour = np.zeros(savings.HOURS_PER_WEEK, dtype=int)
        if cell in layout.surgers:
            budget = max(1, int(round(10 * savings.HOURS_PER_WEEK * layout.excess[cell])))
            for h in np.argsort(-(weights * hour_jitter), kind="stable"):
                if budget <= 0:
                    break
                k = min(int(ks_drawn[h]), budget)
                k_by_hour[h] = k
                budget -= k

        mult_sum = 0.0
        for h in range(savings.HOURS_PER_WEEK):
            ts = (WEEK_START + timedelta(hours=h)).astimezone(timezone.utc)
            price = int(round(base * (1.0 + k_by_hour[h] / 10.0)))
            lo, hi = _symmetric_range(price)
            log.add(route_id, surge.ReplayEntry(timestamp=ts, min_cents=lo, max_cents=hi),
                    base_cents=base)
            mult_sum += price / base
        avg_by_cell[cell] = mult_sum / savings.HOURS_PER_WEEK

    for cell in layout.empty:
        avg_by_cell[cell] = 1.0

    surge.save_routes(paths.routes_weekly, routes)
    log.write(paths.replay_weekly)
    return avg_by_cell


# ---------------------------------------------------------------------------
# Controlled-experiment replays: standardized shared signal + route noise.

def _standardize(x: np.ndarray) -> np.ndarray:
    return (x - x.mean()) / x.std()


def _experiment_series(rng: np.random.Generator, share: float,
                       n_routes: int = 5) -> np.ndarray:
    """(n_routes, 168) multipliers with pairwise correlation ~ share^2."""
    t = np.arange(savings.HOURS_PER_WEEK)
    ar = np.empty(savings.HOURS_PER_WEEK)
    level = 0.0
    for h in t:
        level = 0.85 * level + rng.normal() * 0.5
        ar[h] = level
    shared = _standardize(ar + 0.9 * np.sin(2 * np.pi * (t % 24) / 24.0 - 1.2))

    out = np.empty((n_routes, savings.HOURS_PER_WEEK))
    mix = math.sqrt(1.0 - share * share)
    for r in range(n_routes):
        own = _standardize(rng.normal(size=savings.HOURS_PER_WEEK))
        sig = share * shared + mix * own
        level01 = np.clip(0.35 + 0.25 * sig, 0.0, 1.2)
        out[r] = 1.0 + np.maximum(0, np.rint(10.0 * level01)) / 10.0
    return out


def _write_experiment(paths_replay: Path, paths_routes: Path, prefix: str,
                      mults: np.ndarray, routes: list[surge.Route]) -> None:
    log = surge.ReplayLog()
    for r, route in enumerate(routes):
        base = _route_base_cents(route.origin, route.destination)
        for h in range(savings.HOURS_PER_WEEK):
            ts = (WEEK_START + timedelta(hours=h)).astimezone(timezone.utc)
            price = int(round(base * mults[r, h]))
            lo, hi = _symmetric_range(price)
            log.add(route.route_id,
                    surge.ReplayEntry(timestamp=ts, min_cents=lo, max_cents=hi),
                    base_cents=base)
    surge.save_routes(paths_routes, routes)
    log.write(paths_replay)


def _build_experiments(paths: CorpusPaths, seed: int) -> None:
    rng = _rng(seed, _S_EXPERIMENT)
    spec = ANALYSIS_GRID

    # Shared-origin routes: one origin cell, five destinations.
    origin = spec.cell_center(CellIndex(REGION.row0 + 14, REGION.col0 + 15))
    dests = [spec.cell_center(CellIndex(REGION.row0 + r, REGION.col0 + c))
             for r, c in ((2, 3), (4, 26), (22, 5), (25, 24), (13, 2))]
    fo_routes = [surge.Route(f"fo{r}", origin, d) for r, d in enumerate(dests)]
    _write_experiment(paths.replay_fixed_origin, paths.routes_fixed_origin,
                      "fo", _experiment_series(rng, share=0.98), fo_routes)

    # Shared-destination routes: five origins, one destination.
    dest = spec.cell_center(CellIndex(REGION.row0 + 10, REGION.col0 + 20))
    origins = [spec.cell_center(CellIndex(REGION.row0 + r, REGION.col0 + c))
               for r, c in ((1, 1), (3, 27), (24, 2), (26, 28), (12, 14))]
    fd_routes = [surge.Route(f"fd{r}", o, dest) for r, o in enumerate(origins)]
    _write_experiment(paths.replay_fixed_destination, paths.routes_fixed_destination,
                      "fd", _experiment_series(rng, share=0.74), fd_routes)


# ---------------------------------------------------------------------------
# Area feature table.

def _build_features_table(paths: CorpusPaths, layout: _Layout,
                          avg_by_cell: dict[CellIndex, float]) -> list[predict.AreaFeatureRow]:
    rows = []
    for cell in layout.cells:
        yellow, places, checkins, travel = layout.features[cell]
        rows.append(predict.AreaFeatureRow(
            cell=cell, yellow_trip_count=yellow, fsq_places=places,
            fsq_checkins=checkins, fsq_travel_spots=travel,
            target=avg_by_cell[cell]))
    predict.write_feature_rows(paths.area_features, rows)
    return rows


# ---------------------------------------------------------------------------
# Query log.

def _draw_timestamp(rng: np.random.Generator, slot: int) -> datetime:
    week = int(rng.integers(N_WEEKS))
    minute = int(rng.integers(60))
    second = int(rng.integers(60))
    local = WEEK_START + timedelta(weeks=week, hours=slot,
                                   minutes=minute, seconds=second)
    return local.astimezone(timezone.utc)


def _yellow_price_cents(distance_km: float, duration_min: float,
                        rng: np.random.Generator) -> int:
    metered = 150 + 160 * distance_km + 38 * duration_min
    return max(250, int(round(metered * rng.uniform(0.92, 1.08))))


def _build_queries(paths: CorpusPaths, layout: _Layout, seed: int,
                   weights: np.ndarray, n_users: int = 1800) -> list[savings.QueryLogEntry]:
    rng = _rng(seed, _S_QUERIES)
    spec = ANALYSIS_GRID
    p_slot = weights / weights.sum()
    wn = weights / weights.mean()

    yellow_counts = np.array([layout.features[c][0] for c in layout.cells], dtype=float)
    p_cell = yellow_counts ** 2 / (yellow_counts ** 2).sum()

    entries: list[savings.QueryLogEntry] = []
    for u in range(n_users):
        user_id = f"u{u + 1:04d}"
        n_queries = min(int(rng.geometric(1 / 3.3)), 40)
        for _ in range(n_queries):
            slot = int(rng.choice(savings.HOURS_PER_WEEK, p=p_slot))
            ts = _draw_timestamp(rng, slot)
            o_cell = layout.cells[int(rng.choice(len(layout.cells), p=p_cell))]
            while True:
                d_cell = layout.cells[int(rng.integers(len(layout.cells)))]
                if d_cell != o_cell:
                    break
            origin = _jitter_in_cell(spec, o_cell, rng)
            dest = _jitter_in_cell(spec, d_cell, rng)

            distance = haversine_km(origin[0], origin[1], dest[0], dest[1]) * 1.3
            duration = distance / 18.0 * 60.0
            yellow_cents = _yellow_price_cents(distance, duration, rng)

            base = fares.estimate_uber_base_cents(distance, duration, FIXTURE_CARD)
            if rng.random() < min(0.85, 0.28 * wn[slot]):
                k = 1 + int(rng.choice(len(K_WEIGHTS), p=K_WEIGHTS))
                mult = 1.0 + k / 10.0
            else:
                mult = 1.0
            uber_cents = int(round(base * mult))

            delta = yellow_cents - uber_cents
            winner = "uber" if delta > 0 else ("yellow" if delta < 0 else "tie")
            entries.append(savings.QueryLogEntry(
                user_id=user_id, timestamp=ts, origin=origin, destination=dest,
                yellow_cents=yellow_cents, uber_cents=uber_cents, winner=winner))

    entries.sort(key=lambda e: (e.timestamp, e.user_id))
    with paths.queries.open("w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(e.to_json() + "\n")
    return entries


# ---------------------------------------------------------------------------
# Trip and fare delimited files (with documented dirty rows).

TRIP_COLUMNS = ["medallion", "hack_license", "vendor_id", "rate_code",
                "store_and_fwd_flag", "pickup_datetime", "dropoff_datetime",
                "passenger_count", "trip_time_in_secs", "trip_distance",
                "pickup_longitude", "pickup_latitude",
                "dropoff_longitude", "dropoff_latitude"]
FARE_COLUMNS = ["medallion", "hack_license", "vendor_id", "pickup_datetime",
                "payment_type", "fare_amount", "surcharge", "mta_tax",
                "tip_amount", "tolls_amount", "total_amount"]

# Injected dirty-row counts: keys are reject reasons, values are events.
# Parse-stage events reject one raw row; validation events reject the trip
# and its fare row; ambiguous keys reject two rows in each file.
DIRTY_EVENTS = {
    ingest.BAD_COORDINATE: 12,
    ingest.BAD_TIMESTAMP: 10,
    ingest.BAD_MONEY: 8,
    ingest.BAD_DISTANCE: 6,
    ingest.MISSING_FIELD: 14,
    ingest.NEGATIVE_DISTANCE: 9,
    ingest.TIME_ORDER: 11,
    ingest.OUT_OF_BOX: 13,
    ingest.BAD_AMOUNTS: 7,
    ingest.UNMATCHED_TRIP: 5,
    ingest.UNMATCHED_FARE: 4,
    ingest.AMBIGUOUS_JOIN: 3,  # duplicated keys
}

_PARSE_STAGE_TRIP = (ingest.BAD_COORDINATE, ingest.BAD_TIMESTAMP, ingest.BAD_DISTANCE)
_VALIDATION_STAGE = (ingest.NEGATIVE_DISTANCE, ingest.TIME_ORDER,
                     ingest.OUT_OF_BOX, ingest.BAD_AMOUNTS)


def _fmt_local(ts: datetime) -> str:
    return ts.astimezone(ZoneInfo(LOCAL_TZ)).strftime("%Y-%m-%d %H:%M:%S")


def _clean_trip_pair(i: int, layout: _Layout, rng: np.random.Generator,
                     p_cell_pick: np.ndarray, p_cell_drop: np.ndarray,
                     p_slot: np.ndarray) -> tuple[list, list]:
    spec = ANALYSIS_GRID
    med, hack = f"med{i:05d}", f"hl{i:05d}"
    slot = int(rng.choice(savings.HOURS_PER_WEEK, p=p_slot))
    pickup = _draw_timestamp(rng, slot)
    o_cell = layout.cells[int(rng.choice(len(layout.cells), p=p_cell_pick))]
    while True:
        d_cell = layout.cells[int(rng.choice(len(layout.cells), p=p_cell_drop))]
        if d_cell != o_cell:
            break
    origin = _jitter_in_cell(spec, o_cell, rng)
    dest = _jitter_in_cell(spec, d_cell, rng)

    distance_km = haversine_km(origin[0], origin[1], dest[0], dest[1]) * rng.uniform(1.15, 1.45)
    speed = rng.uniform(12.0, 26.0)
    duration_s = max(120, int(round(distance_km / speed * 3600)))
    dropoff = pickup + timedelta(seconds=duration_s)
    miles = distance_km / KM_PER_MILE

    fare_cents = int(round(250 + 250 * miles + 50 * (duration_s / 60.0)))
    surcharge = 50 if 16 <= pickup.astimezone(ZoneInfo(LOCAL_TZ)).hour < 20 else 0
    mta = 50
    card = rng.random() < 0.6
    tip_cents = int(round(fare_cents * rng.uniform(0.1, 0.25))) if card else 0
    total = fare_cents + surcharge + mta + tip_cents

    trip = [med, hack, "VTS", "1", "N", _fmt_local(pickup), _fmt_local(dropoff),
            str(int(rng.integers(1, 5))), str(duration_s), f"{miles:.2f}",
            f"{origin[1]:.6f}", f"{origin[0]:.6f}", f"{dest[1]:.6f}", f"{dest[0]:.6f}"]
    fare = [med, hack, "VTS", _fmt_local(pickup), "CRD" if card else "CSH",
            fmt_dollars(fare_cents), fmt_dollars(surcharge), fmt_dollars(mta),
            fmt_dollars(tip_cents), "0.00", fmt_dollars(total)]
    return trip, fare


def _build_trip_files(paths: CorpusPaths, layout: _Layout, seed: int,
                      weights: np.ndarray, n_clean: int = 10_000) -> dict:
    rng = _rng(seed, _S_TRIPS)
    p_slot = weights / weights.sum()
    yellow_counts = np.array([layout.features[c][0] for c in layout.cells], dtype=float)
    places_counts = np.array([layout.features[c][1] for c in layout.cells], dtype=float)
    p_pick = yellow_counts ** 2 / (yellow_counts ** 2).sum()
    p_drop = places_counts / places_counts.sum()

    trip_rows: list[list] = []
    fare_rows: list[list] = []
    serial = 0

    def fresh_pair() -> tuple[list, list]:
        nonlocal serial
        pair = _clean_trip_pair(serial, layout, rng, p_pick, p_drop, p_slot)
        serial += 1
        return pair

    for _ in range(n_clean):
        trip, fare = fresh_pair()
        trip_rows.append(trip)
        fare_rows.append(fare)

    # Parse-stage failures: one malformed raw row each.
    for _ in range(DIRTY_EVENTS[ingest.BAD_COORDINATE]):
        trip, fare = fresh_pair()
        trip[11] = "40.7broken"
        trip_rows.append(trip)
        fare_rows.append(fare)  # its partner later counts as unmatched_fare
    for _ in range(DIRTY_EVENTS[ingest.BAD_TIMESTAMP]):
        trip, fare = fresh_pair()
        trip[6] = "2014-13-45 99:99:00"
        trip_rows.append(trip)
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.BAD_DISTANCE]):
        trip, fare = fresh_pair()
        trip[9] = "3..2"
        trip_rows.append(trip)
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.BAD_MONEY]):
        trip, fare = fresh_pair()
        fare[10] = "12.x0"
        trip_rows.append(trip)
        fare_rows.append(fare)
    half = DIRTY_EVENTS[ingest.MISSING_FIELD] // 2
    for j in range(DIRTY_EVENTS[ingest.MISSING_FIELD]):
        trip, fare = fresh_pair()
        if j < half:
            trip[12] = ""
            trip_rows.append(trip)
            fare_rows.append(fare)
        else:
            fare[8] = ""
            trip_rows.append(trip)
            fare_rows.append(fare)

    # Validation failures: well-formed rows with impossible content.
    for _ in range(DIRTY_EVENTS[ingest.NEGATIVE_DISTANCE]):
        trip, fare = fresh_pair()
        trip[9] = "-2.10"
        trip_rows.append(trip)
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.TIME_ORDER]):
        trip, fare = fresh_pair()
        trip[5], trip[6] = trip[6], trip[5]
        fare[3] = trip[5]
        trip_rows.append(trip)
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.OUT_OF_BOX]):
        trip, fare = fresh_pair()
        trip[11] = "39.900000"
        trip_rows.append(trip)
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.BAD_AMOUNTS]):
        trip, fare = fresh_pair()
        fare[10] = "1.00"
        trip_rows.append(trip)
        fare_rows.append(fare)

    # Join failures.
    for _ in range(DIRTY_EVENTS[ingest.UNMATCHED_TRIP]):
        trip, _ = fresh_pair()
        trip_rows.append(trip)
    for _ in range(DIRTY_EVENTS[ingest.UNMATCHED_FARE]):
        _, fare = fresh_pair()
        fare_rows.append(fare)
    for _ in range(DIRTY_EVENTS[ingest.AMBIGUOUS_JOIN]):
        trip, fare = fresh_pair()
        trip_rows.extend([list(trip), list(trip)])
        fare_rows.extend([list(fare), list(fare)])

    order_t = rng.permutation(len(trip_rows))
    order_f = rng.permutation(len(fare_rows))
    with paths.trips.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRIP_COLUMNS) + "\n")
        for i in order_t:
            fh.write(",".join(trip_rows[i]) + "\n")
    with paths.fares.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(FARE_COLUMNS) + "\n")
        for i in order_f:
            fh.write(",".join(fare_rows[i]) + "\n")

    config = {
        "trip_columns": {
            "medallion": "medallion", "hack_license": "hack_license",
            "pickup_time": "pickup_datetime", "dropoff_time": "dropoff_datetime",
            "pickup_lat": "pickup_latitude", "pickup_lon": "pickup_longitude",
            "dropoff_lat": "dropoff_latitude", "dropoff_lon": "dropoff_longitude",
            "trip_distance": "trip_distance",
        },
        "fare_columns": {
            "medallion": "medallion", "hack_license": "hack_license",
            "pickup_time": "pickup_datetime", "payment_type": "payment_type",
            "fare_amount": "fare_amount", "tip_amount": "tip_amount",
            "total_amount": "total_amount",
        },
        "join_key": ["medallion", "hack_license", "pickup_time"],
        "distance_unit": "miles",
        "source_tz": LOCAL_TZ,
    }
    paths.column_map.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    # A row whose partner failed to parse surfaces again as unmatched at join.
    trip_parse_fail = (DIRTY_EVENTS[ingest.BAD_COORDINATE]
                       + DIRTY_EVENTS[ingest.BAD_TIMESTAMP]
                       + DIRTY_EVENTS[ingest.BAD_DISTANCE] + half)
    fare_parse_fail = (DIRTY_EVENTS[ingest.BAD_MONEY]
                       + DIRTY_EVENTS[ingest.MISSING_FIELD] - half)
    expected_rejects = {
        ingest.BAD_COORDINATE: DIRTY_EVENTS[ingest.BAD_COORDINATE],
        ingest.BAD_TIMESTAMP: DIRTY_EVENTS[ingest.BAD_TIMESTAMP],
        ingest.BAD_DISTANCE: DIRTY_EVENTS[ingest.BAD_DISTANCE],
        ingest.BAD_MONEY: DIRTY_EVENTS[ingest.BAD_MONEY],
        ingest.MISSING_FIELD: DIRTY_EVENTS[ingest.MISSING_FIELD],
        ingest.NEGATIVE_DISTANCE: 2 * DIRTY_EVENTS[ingest.NEGATIVE_DISTANCE],
        ingest.TIME_ORDER: 2 * DIRTY_EVENTS[ingest.TIME_ORDER],
        ingest.OUT_OF_BOX: 2 * DIRTY_EVENTS[ingest.OUT_OF_BOX],
        ingest.BAD_AMOUNTS: 2 * DIRTY_EVENTS[ingest.BAD_AMOUNTS],
        ingest.UNMATCHED_TRIP: DIRTY_EVENTS[ingest.UNMATCHED_TRIP] + fare_parse_fail,
        ingest.UNMATCHED_FARE: DIRTY_EVENTS[ingest.UNMATCHED_FARE] + trip_parse_fail,
        ingest.AMBIGUOUS_JOIN: 4 * DIRTY_EVENTS[ingest.AMBIGUOUS_JOIN],
    }

    return {
        "trips_rows": len(trip_rows),
        "fares_rows": len(fare_rows),
        "clean_records": n_clean,
        "expected_rejects": expected_rejects,
    }


# ---------------------------------------------------------------------------
# Venues, check-ins, gazetteer.

VENUE_CATEGORIES = ["food", "bar", "shop", "office", "park", "gym"]

GAZETTEER_PLACES = [
    ("harbor_gate", 6, 7), ("mill_square", 18, 21), ("old_market", 3, 25),
    ("north_yard", 25, 4), ("river_walk", 11, 2), ("glass_works", 22, 27),
    ("iron_bridge", 9, 15), ("clock_tower", 15, 10), ("stone_row", 1, 12),
    ("green_line", 26, 17),
]


def _build_venues(paths: CorpusPaths, layout: _Layout, seed: int) -> int:
    rng = _rng(seed, _S_VENUES)
    spec = ANALYSIS_GRID
    places_counts = np.array([layout.features[c][1] for c in layout.cells], dtype=float)
    p_cell = places_counts / places_counts.sum()

    n_venues = 600
    venue_rows = []
    checkin_rows = []
    for v in range(n_venues):
        cell = layout.cells[int(rng.choice(len(layout.cells), p=p_cell))]
        lat, lon = _jitter_in_cell(spec, cell, rng)
        if rng.random() < 0.08:
            category = "transport"
        else:
            category = VENUE_CATEGORIES[int(rng.integers(len(VENUE_CATEGORIES)))]
        venue_id = f"v{v:04d}"
        venue_rows.append([venue_id, f"{lat:.6f}", f"{lon:.6f}", category])
        checkin_rows.append([venue_id, str(int(rng.integers(5, 120)))])

    with paths.venues.open("w", encoding="utf-8", newline="") as fh:
        fh.write("venue_id,lat,lon,category\n")
        for row in venue_rows:
            fh.write(",".join(row) + "\n")
    with paths.checkins.open("w", encoding="utf-8", newline="") as fh:
        fh.write("venue_id,checkins\n")
        for row in checkin_rows:
            fh.write(",".join(row) + "\n")

    with paths.gazetteer.open("w", encoding="utf-8", newline="") as fh:
        fh.write("name,lat,lon\n")
        for name, dr, dc in GAZETTEER_PLACES:
            lat, lon = spec.cell_center(CellIndex(REGION.row0 + dr, REGION.col0 + dc))
            fh.write(f"{name},{lat:.6f},{lon:.6f}\n")
    return n_venues


# ---------------------------------------------------------------------------
# Calibration: re-read everything through the real pipeline and assert the
# properties the fixtures advertise.

class CalibrationError(AssertionError):
    pass


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise CalibrationError(message)


def _verify_ingest(paths: CorpusPaths, info: dict) -> dict:
    """Run the real ingestion over the written files; the counts must land
    exactly on the construction-side bookkeeping."""
    import tempfile

    config = ingest.IngestConfig.from_json(paths.column_map)
    with tempfile.TemporaryDirectory() as tmp:
        result = ingest.ingest_files(paths.trips, paths.fares, config, reject_dir=tmp)
    report = result.report
    _check(report.check_conservation(), "ingest row conservation failed")
    _check(report.rows_read == info["trips_rows"] + info["fares_rows"],
           f"rows_read {report.rows_read} != file totals")
    _check(len(result.records) == info["clean_records"],
           f"{len(result.records)} records survived, wanted {info['clean_records']}")
    for reason, count in info["expected_rejects"].items():
        got = report.rejection_reasons.get(reason, 0)
        _check(got == count, f"reject {reason}: {got} rows, wanted {count}")
    _check(set(report.rejection_reasons) == set(info["expected_rejects"]),
           f"unexpected reject reasons: {sorted(report.rejection_reasons)}")
    return {"rows_read": report.rows_read, "rows_accepted": report.rows_accepted,
            "rows_rejected": report.rows_rejected, "records": len(result.records)}


def verify_corpus(paths: CorpusPaths) -> dict:
    """Pipeline-level integrity pass; returns the measured statistics."""
    stats: dict = {}

    weekly = surge.ReplayLog.read(paths.replay_weekly)
    series = weekly.series()
    routes = surge.load_routes(paths.routes_weekly)
    _check(len(series) == N_ROUTES, f"expected {N_ROUTES} weekly routes")

    area = surge.area_surge_stats(series, routes, ANALYSIS_GRID, REGION)
    _check(len(area) == len(REGION), "area stats must cover the whole region")
    above = sum(1 for a in area if a.avg_multiplier > 1.0)
    stats["areas_above_one"] = above
    _check(above == N_SURGING, f"{above} areas above 1.0, wanted {N_SURGING}")

    max_mult = max(max(surge.multiplier_series(s)) for s in series.values())
    stats["max_multiplier"] = float(max_mult)
    _check(max_mult <= 3.0, "multiplier cap exceeded")

    entries = savings.read_query_log(paths.queries)
    hist = savings.query_frequency_stats(entries).histogram
    matrix = surge.build_surge_matrix(series)
    st = surge.surge_fraction(matrix, hist.counts)
    stats["st"] = round(st, 6)
    _check(0.27 <= st <= 0.42, f"weekly ST {st:.4f} outside [0.27, 0.42]")

    winners = {e.winner for e in entries}
    stats["queries"] = len(entries)
    _check({"yellow", "uber"} <= winners, "query log must contain both winners")
    stripes = savings.hourly_winner_stripes(entries)
    stats["stripe_yellow_hours"] = stripes.count("yellow")
    stats["stripe_uber_hours"] = stripes.count("uber")
    _check(stripes.count("yellow") >= 5 and stripes.count("uber") >= 5,
           "winner stripes are one-sided")

    for mode, path_r, path_t in (
            (surge.MODE_FIXED_ORIGIN, paths.replay_fixed_origin, paths.routes_fixed_origin),
            (surge.MODE_FIXED_DESTINATION, paths.replay_fixed_destination,
             paths.routes_fixed_destination)):
        log = surge.ReplayLog.read(path_r)
        result = surge.controlled_experiment(log.series().values(), mode)
        stats[f"mean_r_{mode}"] = round(result.mean_pairwise_r, 6)
    _check(stats[f"mean_r_{surge.MODE_FIXED_ORIGIN}"] >= 0.92,
           "shared-origin correlation too low")
    _check(0.40 <= stats[f"mean_r_{surge.MODE_FIXED_DESTINATION}"] <= 0.75,
           "shared-destination correlation out of band")
    _check(stats[f"mean_r_{surge.MODE_FIXED_DESTINATION}"]
           < stats[f"mean_r_{surge.MODE_FIXED_ORIGIN}"] - 0.1,
           "experiment contrast too small")

    rows = predict.read_feature_rows(paths.area_features)
    _check(len(rows) == len(REGION), "feature table must have one row per area")
    targets = {r.cell: r.target for r in rows}
    for a in area:
        _check(abs(targets[a.cell] - a.avg_multiplier) < 1e-9,
               f"feature target for {a.cell} disagrees with replay")

    report = predict.evaluate_rows(rows, baseline_trials=300)
    stats["pearson"] = {k: round(v, 4) for k, v in report.pearson.items()}
    stats["ndcg"] = {k: round(v, 4) for k, v in report.ndcg.items()}
    stats["baseline_ndcg"] = round(report.baseline_ndcg, 4)
    p = report.pearson
    _check(p["model"] > max(p[f] for f in ("yellow_trips", "places", "checkins",
                                           "travel_spots")) + 0.02,
           f"model r {p['model']:.3f} does not clear the single features")
    _check(p["yellow_trips"] >= p["places"] > p["checkins"] > p["travel_spots"],
           f"feature correlation ordering broken: {p}")
    n = report.ndcg
    _check(n["model"] > max(n[f] for f in ("yellow_trips", "places", "checkins",
                                           "travel_spots")),
           "model NDCG does not clear the single features")
    return stats


def build_corpus(root: str | Path, seed: int = DATA_SEED,
                 n_clean_trips: int = 10_000) -> CorpusPaths:
    """Write the full corpus under `root` and verify it; see module docstring."""
    paths = CorpusPaths(root=Path(root))
    paths.root.mkdir(parents=True, exist_ok=True)

    weights = query_weights()
    layout = _build_layout(seed)
    avg_by_cell = _build_weekly(paths, layout, seed, weights)
    _build_experiments(paths, seed)
    _build_features_table(paths, layout, avg_by_cell)
    _build_queries(paths, layout, seed, weights)
    ingest_info = _build_trip_files(paths, layout, seed, weights, n_clean_trips)
    _build_venues(paths, layout, seed)

    measured = verify_corpus(paths)
    measured["ingest"] = _verify_ingest(paths, ingest_info)
    manifest = {
        "seed": seed,
        "region": [REGION.row0, REGION.col0, REGION.n_rows, REGION.n_cols],
        "routes": N_ROUTES,
        "surging_areas": N_SURGING,
        "ingest": ingest_info,
        "measured": measured,
    }
    paths.manifest.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    return paths

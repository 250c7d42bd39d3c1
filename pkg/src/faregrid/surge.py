"""Surge pricing: multiplier series, the ST surge fraction, controlled
correlation experiments, area statistics, and price providers.

Two providers implement the competitor quote interface: a replay provider
that serves recorded (or bundled synthetic) week-long logs, and a synthetic
provider that draws multipliers from a configured stationary distribution,
deterministically in (seed, route, time slot).  Replay logs are the system
of record for every aggregate analysis here.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (AlignmentError, DegenerateWeightsError, EmptyInputError,
                     InvalidBaseError, QuoteUnavailableError,
                     UndefinedCorrelationError)
from .grid import CellIndex, CellRect, GridSpec
from .fares import PROVIDER_UBER, PriceQuote, SOURCE_REPLAY, SOURCE_SYNTHETIC
from .money import fmt_dollars, parse_dollars
from .savings import DEFAULT_TZ, HOURS_PER_WEEK, hour_of_week

SURGE_EPSILON = 1e-6
BASE_TOLERANCE = 1e-9

MODE_FIXED_ORIGIN = "fixed_origin"
MODE_FIXED_DESTINATION = "fixed_destination"

_HOUR = timedelta(hours=1)

# Every ST figure inherits the assumption that the query histogram applies
# uniformly across areas; carried in output metadata, not silently.
UNIFORM_DEMAND_NOTE = "P_t treated as spatially uniform across areas"


@dataclass(frozen=True)
class SurgeSeries:
    """Price evaluations of one route over time (cents, UTC, time-ordered)."""

    route_id: str
    base_cents: int
    samples: tuple[tuple[datetime, int], ...]
    sampling_interval_s: int = 3600

    def __post_init__(self):
        times = [t for t, _ in self.samples]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError(f"samples for route {self.route_id!r} are not time-ordered")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> tuple[datetime, ...]:
        return tuple(t for t, _ in self.samples)

    @property
    def prices_cents(self) -> np.ndarray:
        return np.array([p for _, p in self.samples], dtype=float)


def multiplier_series(series: SurgeSeries) -> np.ndarray:
    """Elementwise price(i,t) / base_price(i)."""
    if series.base_cents <= 0:
        raise InvalidBaseError(f"route {series.route_id!r} has base {series.base_cents} cents")
    return series.prices_cents / float(series.base_cents)


def avg_surge_multiplier(series: SurgeSeries) -> float:
    """Mean of the route's multipliers over all its price evaluations."""
    if len(series) == 0:
        raise EmptyInputError(f"route {series.route_id!r} has no samples")
    return float(multiplier_series(series).mean())


@dataclass(frozen=True)
class SurgeMatrix:
    """Binary N x T indicators: s[i, t] = 1 when route i surges in slot t."""

    s: np.ndarray
    route_ids: tuple[str, ...]

    def __post_init__(self):
        if self.s.ndim != 2 or self.s.shape[0] != len(self.route_ids):
            raise ValueError("matrix shape inconsistent with route ids")
        if not np.isin(self.s, (0, 1)).all():
            raise ValueError("surge indicators must be 0 or 1")

    @property
    def n_routes(self) -> int:
        return self.s.shape[0]

    @property
    def n_slots(self) -> int:
        return self.s.shape[1]


def build_surge_matrix(series_by_route: dict[str, SurgeSeries],
                       tz: str = DEFAULT_TZ,
                       epsilon: float = SURGE_EPSILON) -> SurgeMatrix:
    """Reduce series to hour-of-week surge indicators.

    A route surges in a slot when any of its samples in that slot has
    multiplier > 1 + epsilon (hourly sampling makes "any" and "all"
    coincide on one-sample-per-hour data).
    """
    route_ids = tuple(sorted(series_by_route))
    s = np.zeros((len(route_ids), HOURS_PER_WEEK), dtype=np.int8)
    for i, route_id in enumerate(route_ids):
        series = series_by_route[route_id]
        mults = multiplier_series(series)
        for (ts, _), m in zip(series.samples, mults):
            if m > 1.0 + epsilon:
                s[i, hour_of_week(ts, tz)] = 1
    return SurgeMatrix(s=s, route_ids=route_ids)


def surge_fraction(matrix: SurgeMatrix, weights: Sequence[float]) -> float:
    """ST: query-weighted fraction of surging (route, hour) pairs.

    sum_i sum_t s_it * P_t / (N * sum_t P_t).
    """
    p = np.asarray(weights, dtype=float)
    if p.shape != (matrix.n_slots,):
        raise DegenerateWeightsError(
            f"expected {matrix.n_slots} weights, got {p.shape}")
    if np.any(p < 0):
        raise DegenerateWeightsError("negative query weights")
    total = float(p.sum())
    if total <= 0.0:
        raise DegenerateWeightsError("query histogram sums to zero")
    weighted = float((matrix.s.astype(float) @ p).sum())
    return weighted / (matrix.n_routes * total)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation in [-1, 1].

    Exactly collinear inputs short-circuit to +/-1 so they are not subject
    to square-root rounding.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise ValueError("pearson_r needs two equal-length 1-d sequences")
    if xa.size < 2:
        raise UndefinedCorrelationError("need at least two points")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    sxy = float(dx @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    if sxx == syy and abs(sxy) == sxx:
        return 1.0 if sxy > 0 else -1.0
    denom = sxx * syy
    if denom <= 0.0 or math.isinf(denom):
        # the product under- or overflowed even though both factors are
        # positive finite floats; factoring the roots stays representable
        denom = math.sqrt(sxx) * math.sqrt(syy)
    else:
        denom = math.sqrt(denom)
    r = sxy / denom
    return max(-1.0, min(1.0, r))


def resample_locf(series: SurgeSeries, grid_times: Sequence[datetime]) -> np.ndarray:
    """Multipliers at the given instants, last observation carried forward.

    Raises AlignmentError when a grid instant precedes the first sample.
    """
    mults = multiplier_series(series)
    times = series.times
    out = np.empty(len(grid_times))
    for k, g in enumerate(grid_times):
        idx = bisect_right(times, g) - 1
        if idx < 0:
            raise AlignmentError(
                f"route {series.route_id!r} has no sample at or before {g.isoformat()}")
        out[k] = mults[idx]
    return out


@dataclass(frozen=True)
class ExperimentResult:
    mode: str
    route_ids: tuple[str, ...]
    r_matrix: np.ndarray
    mean_pairwise_r: float


def controlled_experiment(series_set: Iterable[SurgeSeries], mode: str) -> ExperimentResult:
    """All-pairs correlation of routes sharing an origin (or a destination).

    Series are resampled onto a common hourly grid spanning their overlap;
    overlaps shorter than two samples cannot be correlated.
    """
    if mode not in (MODE_FIXED_ORIGIN, MODE_FIXED_DESTINATION):
        raise ValueError(f"unknown experiment mode {mode!r}")
    series_list = sorted(series_set, key=lambda s: s.route_id)
    if len(series_list) < 2:
        raise EmptyInputError("controlled experiment needs at least two routes")
    for s in series_list:
        if len(s) == 0:
            raise AlignmentError(f"route {s.route_id!r} has no samples")

    start = max(s.times[0] for s in series_list)
    end = min(s.times[-1] for s in series_list)
    n_slots = int((end - start).total_seconds() // 3600) + 1
    if end < start or n_slots < 2:
        raise AlignmentError("series overlap shorter than two hourly samples")
    grid = [start + k * _HOUR for k in range(n_slots)]

    aligned = [resample_locf(s, grid) for s in series_list]
    k = len(aligned)
    r = np.eye(k)
    pair_values = []
    for i in range(k):
        for j in range(i + 1, k):
            rij = pearson_r(aligned[i], aligned[j])
            r[i, j] = r[j, i] = rij
            pair_values.append(rij)
    return ExperimentResult(
        mode=mode,
        route_ids=tuple(s.route_id for s in series_list),
        r_matrix=r,
        mean_pairwise_r=float(np.mean(pair_values)),
    )


@dataclass(frozen=True)
class AreaSurgeStats:
    cell: CellIndex
    avg_multiplier: float
    route_count: int

    def __post_init__(self):
        if self.avg_multiplier < 1.0 - BASE_TOLERANCE:
            raise ValueError(f"area multiplier below 1: {self.avg_multiplier}")


@dataclass(frozen=True)
class Route:
    route_id: str
    origin: tuple[float, float]
    destination: tuple[float, float]


def load_routes(path: str | Path) -> dict[str, Route]:
    """Read the companion route table: route_id and endpoint coordinates."""
    routes: dict[str, Route] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            route = Route(
                route_id=row["route_id"],
                origin=(float(row["origin_lat"]), float(row["origin_lon"])),
                destination=(float(row["dest_lat"]), float(row["dest_lon"])),
            )
            routes[route.route_id] = route
    return routes


def save_routes(path: str | Path, routes: Iterable[Route]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["route_id", "origin_lat", "origin_lon", "dest_lat", "dest_lon"])
        for r in sorted(routes, key=lambda r: r.route_id):
            writer.writerow([r.route_id,
                             f"{r.origin[0]:.6f}", f"{r.origin[1]:.6f}",
                             f"{r.destination[0]:.6f}", f"{r.destination[1]:.6f}"])


def area_surge_stats(series_by_route: dict[str, SurgeSeries],
                     routes: dict[str, Route], spec: GridSpec,
                     region: CellRect | None = None) -> list[AreaSurgeStats]:
    """Average multiplier per origin cell: mean over routes leaving the cell
    of each route's time-averaged multiplier.

    With a region, every cell of the region is reported; cells without any
    route sit at the 1.0 baseline (no surge was ever observed there).
    """
    by_cell: dict[CellIndex, list[float]] = {}
    for route_id, series in series_by_route.items():
        route = routes.get(route_id)
        if route is None:
            raise KeyError(f"series for unknown route {route_id!r}")
        cell = spec.cell_of(*route.origin)
        by_cell.setdefault(cell, []).append(avg_surge_multiplier(series))

    cells = list(region.cells()) if region is not None else sorted(by_cell)
    out = []
    for cell in cells:
        avgs = by_cell.get(cell)
        if avgs:
            out.append(AreaSurgeStats(cell=cell, avg_multiplier=float(np.mean(avgs)),
                                      route_count=len(avgs)))
        else:
            out.append(AreaSurgeStats(cell=cell, avg_multiplier=1.0, route_count=0))
    return out


def heatmap_raster(stats: Sequence[AreaSurgeStats], region: CellRect) -> np.ndarray:
    """Region-shaped array of avg multipliers; cells not in stats sit at 1.0."""
    raster = np.ones((region.n_rows, region.n_cols))
    for st in stats:
        if st.cell in region:
            raster[st.cell.row - region.row0, st.cell.col - region.col0] = st.avg_multiplier
    return raster


def multiplier_histogram(stats: Sequence[AreaSurgeStats],
                         bin_width: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of cell averages: (bin_edges, counts)."""
    values = np.array([st.avg_multiplier for st in stats])
    top = max(1.0 + bin_width, float(values.max()) + bin_width) if values.size else 1.0 + bin_width
    edges = np.arange(1.0, top + bin_width / 2, bin_width)
    counts, edges = np.histogram(values, bins=edges)
    return edges, counts


# ---------------------------------------------------------------------------
# Replay log: the recorded-quote format every aggregate analysis runs on.

REPLAY_HEADER = ["route_id", "timestamp", "min", "max", "base_price"]


@dataclass(frozen=True)
class ReplayEntry:
    timestamp: datetime
    min_cents: int
    max_cents: int

    @property
    def mid_cents(self) -> int:
        return int(round((self.min_cents + self.max_cents) / 2))


class ReplayLog:
    """Recorded competitor quotes, one (route, timestamp) entry per line."""

    def __init__(self):
        self.entries: dict[str, list[ReplayEntry]] = {}
        self.base_cents: dict[str, int] = {}

    def add(self, route_id: str, entry: ReplayEntry, base_cents: int) -> None:
        known = self.base_cents.get(route_id)
        if known is not None and known != base_cents:
            raise ValueError(f"route {route_id!r} base price changed mid-log")
        self.base_cents[route_id] = base_cents
        self.entries.setdefault(route_id, []).append(entry)

    def series(self) -> dict[str, SurgeSeries]:
        out = {}
        for route_id, entries in self.entries.items():
            ordered = sorted(entries, key=lambda e: e.timestamp)
            out[route_id] = SurgeSeries(
                route_id=route_id,
                base_cents=self.base_cents[route_id],
                samples=tuple((e.timestamp, e.mid_cents) for e in ordered),
            )
        return out

    @classmethod
    def read(cls, path: str | Path) -> "ReplayLog":
        log = cls()
        with Path(path).open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != REPLAY_HEADER:
                raise ValueError(f"unexpected replay header {header!r}")
            for row in reader:
                route_id, ts, lo, hi, base = row
                log.add(route_id,
                        ReplayEntry(timestamp=datetime.fromisoformat(ts),
                                    min_cents=parse_dollars(lo),
                                    max_cents=parse_dollars(hi)),
                        base_cents=parse_dollars(base))
        return log

    def write(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPLAY_HEADER)
            for route_id in sorted(self.entries):
                base = fmt_dollars(self.base_cents[route_id])
                for e in sorted(self.entries[route_id], key=lambda e: e.timestamp):
                    writer.writerow([
                        route_id,
                        e.timestamp.astimezone(timezone.utc).isoformat(),
                        fmt_dollars(e.min_cents), fmt_dollars(e.max_cents), base,
                    ])


def _coord_key(origin: tuple[float, float], destination: tuple[float, float]) -> tuple:
    return (round(origin[0], 6), round(origin[1], 6),
            round(destination[0], 6), round(destination[1], 6))


class ReplayProvider:
    """Serve recorded quotes by (route endpoints, hour slot); read-only."""

    def __init__(self, log: ReplayLog, routes: dict[str, Route]):
        self._by_slot: dict[tuple[str, int], ReplayEntry] = {}
        self._route_by_coords: dict[tuple, str] = {}
        self.base_cents = dict(log.base_cents)
        for route_id, entries in log.entries.items():
            for e in entries:
                slot = int(e.timestamp.timestamp() // 3600)
                self._by_slot[(route_id, slot)] = e
        for route in routes.values():
            self._route_by_coords[_coord_key(route.origin, route.destination)] = route.route_id

    def quote(self, origin: tuple[float, float], destination: tuple[float, float],
              when: datetime | None = None) -> PriceQuote:
        if when is None:
            raise QuoteUnavailableError("replay lookups need an explicit time")
        route_id = self._route_by_coords.get(_coord_key(origin, destination))
        if route_id is None:
            raise QuoteUnavailableError("no recorded route for these endpoints")
        return self.quote_route(route_id, when)

    def quote_route(self, route_id: str, when: datetime) -> PriceQuote:
        entry = self._by_slot.get((route_id, int(when.timestamp() // 3600)))
        if entry is None:
            raise QuoteUnavailableError(
                f"no recorded quote for route {route_id!r} at {when.isoformat()}")
        base = self.base_cents[route_id]
        return PriceQuote.from_range(
            PROVIDER_UBER, entry.min_cents, entry.max_cents,
            multiplier=entry.mid_cents / base, source=SOURCE_REPLAY)


# ---------------------------------------------------------------------------
# Synthetic provider: a deterministic stand-in for the live price API.

_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    """splitmix64 finalizer; avalanche for short structured keys."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fnv64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def hash_u01(*parts: int) -> float:
    """Uniform [0, 1) from integer parts; stable across runs and platforms."""
    acc = 0
    for p in parts:
        acc = _mix64(acc ^ (p & _MASK64))
    return (acc >> 11) / float(1 << 53)


# Stationary multiplier distribution: ~28% of evaluations surge, tail to 2.0,
# comfortably under the x3 cap.
DEFAULT_STATIONARY = (
    (1.0, 0.72), (1.1, 0.07), (1.2, 0.055), (1.3, 0.04), (1.4, 0.03),
    (1.5, 0.025), (1.6, 0.02), (1.7, 0.015), (1.8, 0.012), (1.9, 0.008),
    (2.0, 0.005),
)


@dataclass(frozen=True)
class SurgeModelConfig:
    """Demand process for the synthetic provider.

    `stationary` states the long-run multiplier distribution realized under
    unit demand weight; cell demand weights tilt draws toward higher
    quantiles without changing the support.
    """

    stationary: tuple[tuple[float, float], ...] = DEFAULT_STATIONARY
    step: float = 0.1
    cap: float = 3.0
    spread_frac: float = 0.05
    use_destination_weight: bool = False

    def __post_init__(self):
        probs = [p for _, p in self.stationary]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("stationary probabilities must be >= 0 and sum to 1")
        if any(m < 1.0 or m > self.cap + BASE_TOLERANCE for m, _ in self.stationary):
            raise ValueError("stationary support must lie in [1, cap]")

    def quantile(self, u: float) -> float:
        """Inverse CDF of the stationary distribution, quantized to `step`
        and capped."""
        acc = 0.0
        value = self.stationary[0][0]
        for m, p in self.stationary:
            acc += p
            value = m
            if u < acc:
                break
        quantized = round(value / self.step) * self.step
        return min(self.cap, round(quantized, 10))


def sample_multiplier(config: SurgeModelConfig, seed: int, route_key: int,
                      slot: int, weight: float = 1.0) -> float:
    """Deterministic multiplier draw for one (route, hour slot).

    Weight w > 1 tilts toward high quantiles via u^(1/w); w = 0 means no
    demand, hence never a surge.
    """
    if weight <= 0.0:
        return 1.0
    u = hash_u01(seed, route_key, slot)
    if weight != 1.0:
        u = u ** (1.0 / weight)
    return config.quantile(u)


class SyntheticProvider:
    """Competitor price surrogate: deterministic surge over a base tariff.

    `base_of` prices the un-surged route; `demand_of` (optional) maps a cell
    to its demand weight, defaulting to uniform demand.
    """

    def __init__(self, spec: GridSpec, base_of: Callable[[tuple[float, float], tuple[float, float]], int],
                 config: SurgeModelConfig = SurgeModelConfig(), seed: int = 0,
                 demand_of: Callable[[CellIndex], float] | None = None,
                 pinned_multiplier: float | None = None):
        self.spec = spec
        self.base_of = base_of
        self.config = config
        self.seed = seed
        self.demand_of = demand_of
        self.pinned_multiplier = pinned_multiplier

    def _weight(self, origin: tuple[float, float], destination: tuple[float, float]) -> float:
        if self.demand_of is None:
            return 1.0
        w = self.demand_of(self.spec.cell_of(*origin))
        if self.config.use_destination_weight:
            w *= self.demand_of(self.spec.cell_of(*destination))
        return w

    def multiplier_at(self, origin: tuple[float, float], destination: tuple[float, float],
                      when: datetime) -> float:
        if self.pinned_multiplier is not None:
            return min(self.config.cap, self.pinned_multiplier)
        route_key = _fnv64("%.6f,%.6f->%.6f,%.6f" % (origin[0], origin[1],
                                                     destination[0], destination[1]))
        slot = int(when.timestamp() // 3600)
        return sample_multiplier(self.config, self.seed, route_key, slot,
                                 self._weight(origin, destination))

    def quote(self, origin: tuple[float, float], destination: tuple[float, float],
              when: datetime | None = None) -> PriceQuote:
        when = when if when is not None else datetime.now(timezone.utc)
        base = self.base_of(origin, destination)
        m = self.multiplier_at(origin, destination, when)
        price = int(round(base * m))
        spread = int(round(price * self.config.spread_frac))
        return PriceQuote.from_range(PROVIDER_UBER, price - spread, price + spread,
                                     multiplier=m, source=SOURCE_SYNTHETIC)

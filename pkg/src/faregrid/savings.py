"""User savings analytics over the app's query log.

Works on an append-only JSON-lines log of price comparisons.  Everything here
is a pure batch computation over an immutable snapshot; the summary types
merge associatively so partitioned logs can be reduced in any order.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .errors import EmptyInputError
from .money import fmt_dollars, from_cents, parse_dollars

HOURS_PER_WEEK = 168
DEFAULT_TZ = "America/New_York"

STRATEGY_APP = "app_driven"
STRATEGY_YELLOW = "always_yellow"
STRATEGY_UBER = "always_uber"
STRATEGY_RANDOM = "random"
STRATEGIES = (STRATEGY_APP, STRATEGY_YELLOW, STRATEGY_UBER, STRATEGY_RANDOM)

# Stripe letters: yellow win, black (competitor) win, tie, no data.
STRIPE_YELLOW = "Y"
STRIPE_BLACK = "B"
STRIPE_TIE = "T"
STRIPE_NO_DATA = "N"

WINNER_BY_STRIPE = {"yellow": STRIPE_YELLOW, "uber": STRIPE_BLACK,
                    "tie": STRIPE_TIE, "no_data": STRIPE_NO_DATA}


@dataclass(frozen=True)
class QueryLogEntry:
    """One logged price comparison; prices in integer cents, timestamp UTC."""

    user_id: str
    timestamp: datetime
    origin: tuple[float, float]
    destination: tuple[float, float]
    yellow_cents: int
    uber_cents: int
    winner: str

    def __post_init__(self):
        if self.yellow_cents < 0 or self.uber_cents < 0:
            raise ValueError("logged prices must be nonnegative")

    @property
    def delta_cents(self) -> int:
        return self.yellow_cents - self.uber_cents

    def to_json(self) -> str:
        return json.dumps({
            "user_id": self.user_id,
            "timestamp": self.timestamp.astimezone(timezone.utc).isoformat(),
            "origin": [self.origin[0], self.origin[1]],
            "destination": [self.destination[0], self.destination[1]],
            "yellow_price": fmt_dollars(self.yellow_cents),
            "uber_price": fmt_dollars(self.uber_cents),
            "winner": self.winner,
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "QueryLogEntry":
        raw = json.loads(line)
        return cls(
            user_id=raw["user_id"],
            timestamp=datetime.fromisoformat(raw["timestamp"]),
            origin=(raw["origin"][0], raw["origin"][1]),
            destination=(raw["destination"][0], raw["destination"][1]),
            yellow_cents=parse_dollars(raw["yellow_price"]),
            uber_cents=parse_dollars(raw["uber_price"]),
            winner=raw["winner"],
        )


def read_query_log(path: str | Path) -> list[QueryLogEntry]:
    entries = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(QueryLogEntry.from_json(line))
    return entries


def append_query_log(path: str | Path, entry: QueryLogEntry) -> None:
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(entry.to_json() + "\n")


def hour_of_week(ts: datetime, tz: str = DEFAULT_TZ) -> int:
    """Slot index 0..167: local weekday (Monday 0) * 24 + local hour."""
    local = ts.astimezone(ZoneInfo(tz))
    return local.weekday() * 24 + local.hour


@dataclass
class DeltaSummary:
    """Δτ = yellow − uber per journey; savings is the mean absolute gap.

    Integer totals keep the merge exact; means are derived on read.
    """

    count: int = 0
    total_delta_cents: int = 0
    total_abs_delta_cents: int = 0
    bin_cents: int = 100
    histogram: Counter = field(default_factory=Counter)

    def add(self, delta_cents: int) -> None:
        self.count += 1
        self.total_delta_cents += delta_cents
        self.total_abs_delta_cents += abs(delta_cents)
        self.histogram[delta_cents // self.bin_cents] += 1

    def merge(self, other: "DeltaSummary") -> None:
        if other.bin_cents != self.bin_cents:
            raise ValueError("cannot merge histograms with different bins")
        self.count += other.count
        self.total_delta_cents += other.total_delta_cents
        self.total_abs_delta_cents += other.total_abs_delta_cents
        self.histogram.update(other.histogram)

    @property
    def mean_delta(self) -> float:
        return from_cents(self.total_delta_cents) / self.count

    @property
    def mean_saving(self) -> float:
        return from_cents(self.total_abs_delta_cents) / self.count


def delta_distribution(log: Sequence[QueryLogEntry], bin_dollars: float = 1.0) -> DeltaSummary:
    if not log:
        raise EmptyInputError("query log is empty")
    summary = DeltaSummary(bin_cents=int(round(bin_dollars * 100)))
    for entry in log:
        summary.add(entry.delta_cents)
    return summary


@dataclass(frozen=True)
class StrategyEvaluation:
    strategy: str
    costs_cents: tuple[float, ...]
    mean_cost_cents: float
    median_cost_cents: float

    @property
    def mean_cost(self) -> float:
        return from_cents(self.mean_cost_cents)

    @property
    def median_cost(self) -> float:
        return from_cents(self.median_cost_cents)


def _strategy_costs(log: Sequence[QueryLogEntry], strategy: str,
                    rng: np.random.Generator | None) -> list[float]:
    if strategy == STRATEGY_APP:
        return [float(min(e.yellow_cents, e.uber_cents)) for e in log]
    if strategy == STRATEGY_YELLOW:
        return [float(e.yellow_cents) for e in log]
    if strategy == STRATEGY_UBER:
        return [float(e.uber_cents) for e in log]
    if strategy == STRATEGY_RANDOM:
        if rng is None:
            # Closed-form expectation: each journey contributes the average
            # of its two prices, so results stay deterministic.
            return [(e.yellow_cents + e.uber_cents) / 2.0 for e in log]
        picks = rng.integers(0, 2, size=len(log))
        return [float(e.uber_cents if pick else e.yellow_cents)
                for e, pick in zip(log, picks)]
    raise ValueError(f"unknown strategy {strategy!r}")


def evaluate_strategy(log: Sequence[QueryLogEntry], strategy: str,
                      seed: int | None = None) -> StrategyEvaluation:
    """Cost of following one pick-up strategy over every logged journey.

    The random strategy defaults to its expectation; pass a seed for a
    simulated uniform pick per journey.
    """
    if not log:
        raise EmptyInputError("query log is empty")
    rng = np.random.default_rng(seed) if seed is not None else None
    costs = _strategy_costs(log, strategy, rng)
    return StrategyEvaluation(
        strategy=strategy,
        costs_cents=tuple(costs),
        mean_cost_cents=float(np.mean(costs)),
        median_cost_cents=float(np.median(costs)),
    )


def evaluate_all_strategies(log: Sequence[QueryLogEntry],
                            seed: int | None = None) -> dict[str, StrategyEvaluation]:
    return {s: evaluate_strategy(log, s, seed) for s in STRATEGIES}


def hourly_winner_stripes(log: Iterable[QueryLogEntry], tz: str = DEFAULT_TZ) -> list[str]:
    """Majority winner per hour-of-week across the whole log.

    Hours with no entries report "no_data"; equal yellow and uber win counts
    report "tie" (per-entry ties count toward neither side).
    """
    yellow = [0] * HOURS_PER_WEEK
    uber = [0] * HOURS_PER_WEEK
    seen = [0] * HOURS_PER_WEEK
    for entry in log:
        slot = hour_of_week(entry.timestamp, tz)
        seen[slot] += 1
        if entry.winner == "yellow":
            yellow[slot] += 1
        elif entry.winner == "uber":
            uber[slot] += 1
    out = []
    for slot in range(HOURS_PER_WEEK):
        if seen[slot] == 0:
            out.append("no_data")
        elif yellow[slot] > uber[slot]:
            out.append("yellow")
        elif uber[slot] > yellow[slot]:
            out.append("uber")
        else:
            out.append("tie")
    return out


def stripes_string(stripes: Sequence[str]) -> str:
    return "".join(WINNER_BY_STRIPE[s] for s in stripes)


@dataclass(frozen=True)
class QueryHistogram:
    """P_t: queries per hour-of-week, the trips-purchased proxy."""

    counts: np.ndarray
    tz: str = DEFAULT_TZ

    def __post_init__(self):
        if self.counts.shape != (HOURS_PER_WEEK,):
            raise ValueError("histogram must have exactly 168 slots")
        if np.any(self.counts < 0):
            raise ValueError("histogram counts must be nonnegative")

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class QueryFrequencyStats:
    per_user_counts: dict[str, int]
    cdf: list[tuple[int, float]]
    histogram: QueryHistogram
    daily_profile: np.ndarray
    mean_queries_per_user: float


def query_frequency_stats(log: Sequence[QueryLogEntry], tz: str = DEFAULT_TZ) -> QueryFrequencyStats:
    """Per-user query counts (with CDF), P_t, and the 24-hour mean profile."""
    per_user: Counter = Counter(e.user_id for e in log)
    counts = np.zeros(HOURS_PER_WEEK)
    for entry in log:
        counts[hour_of_week(entry.timestamp, tz)] += 1

    cdf: list[tuple[int, float]] = []
    if per_user:
        values = sorted(per_user.values())
        n = len(values)
        for v in sorted(set(values)):
            cdf.append((v, sum(1 for x in values if x <= v) / n))

    daily = counts.reshape(7, 24).mean(axis=0)
    mean_per_user = (len(log) / len(per_user)) if per_user else 0.0
    return QueryFrequencyStats(
        per_user_counts=dict(per_user),
        cdf=cdf,
        histogram=QueryHistogram(counts=counts, tz=tz),
        daily_profile=daily,
        mean_queries_per_user=mean_per_user,
    )

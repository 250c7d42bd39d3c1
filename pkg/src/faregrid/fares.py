"""Per-journey price estimates for both providers and the winner call.

Yellow cab prices come from observed history: the mean total over the
journey's origin/destination bucket.  When a bucket is cold the engine falls
back to a least-squares tariff fitted on the whole ingested sample.  The
competitor quote is a [min, max] range from a price provider; we take the
midpoint.  All arithmetic that decides a winner happens in integer cents.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Protocol

import numpy as np

from .errors import (EmptyInputError, InvalidBaseError, OutOfGridError,
                     QuoteUnavailableError)
from .geo import KM_PER_MILE, haversine_km
from .grid import CellIndex, GridSpec, ODIndex
from .ingest import TripRecord
from .money import from_cents, to_cents

PROVIDER_YELLOW = "yellow"
PROVIDER_UBER = "uber"

SOURCE_HISTORICAL = "historical"
SOURCE_SYNTHETIC = "synthetic"
SOURCE_REPLAY = "replay"
SOURCE_FALLBACK = "fallback"

WINNER_YELLOW = "yellow"
WINNER_UBER = "uber"
WINNER_TIE = "tie"


@dataclass(frozen=True)
class RateCard:
    """Linear tariff: per_km and per_minute in dollars, minimum fare floor."""

    per_km: float
    per_minute: float
    minimum_fare: float = 0.0
    multiplier_cap: float = 3.0

    def __post_init__(self):
        if self.per_km < 0 or self.per_minute < 0 or self.minimum_fare < 0:
            raise InvalidBaseError("rates must be nonnegative")
        if self.multiplier_cap < 1.0:
            raise InvalidBaseError("multiplier cap below 1 would discount surge")


# UberX NYC rate card: $2.15/mile and 40 cents/minute, stored per km.
UBERX_NYC = RateCard(per_km=2.15 / KM_PER_MILE, per_minute=0.40)


@dataclass(frozen=True)
class PriceQuote:
    provider: str
    min_cents: int
    max_cents: int
    mean_cents: int
    multiplier: float = 1.0
    source: str = SOURCE_HISTORICAL

    def __post_init__(self):
        if not self.min_cents <= self.mean_cents <= self.max_cents:
            raise InvalidBaseError(
                f"quote violates min <= mean <= max: {self.min_cents}, {self.mean_cents}, {self.max_cents}")

    @classmethod
    def from_range(cls, provider: str, min_cents: int, max_cents: int,
                   multiplier: float = 1.0, source: str = SOURCE_HISTORICAL) -> "PriceQuote":
        """Midpoint of the advertised [min, max] range, rounded to a cent."""
        mean = int(round((min_cents + max_cents) / 2))
        return cls(provider, min_cents, max_cents, mean, multiplier, source)

    @classmethod
    def point(cls, provider: str, cents: int, multiplier: float = 1.0,
              source: str = SOURCE_HISTORICAL) -> "PriceQuote":
        return cls(provider, cents, cents, cents, multiplier, source)

    @property
    def min_amount(self) -> float:
        return from_cents(self.min_cents)

    @property
    def max_amount(self) -> float:
        return from_cents(self.max_cents)

    @property
    def mean_amount(self) -> float:
        return from_cents(self.mean_cents)


class PriceProvider(Protocol):
    """Handle onto a competitor price source (live surrogate or replay)."""

    def quote(self, origin: tuple[float, float], destination: tuple[float, float],
              when: datetime | None = None) -> PriceQuote: ...


@dataclass(frozen=True)
class Journey:
    origin_lat: float
    origin_lon: float
    dest_lat: float
    dest_lon: float
    origin_cell: CellIndex
    dest_cell: CellIndex


@dataclass(frozen=True)
class ComparisonResult:
    journey: Journey
    yellow_quote: PriceQuote
    uber_quote: PriceQuote
    winner: str
    delta_cents: int

    @property
    def delta_amount(self) -> float:
        return from_cents(self.delta_cents)


@dataclass(frozen=True)
class EngineParams:
    """Estimator knobs that are engineering choices, not observed tariffs."""

    min_samples: int = 1
    circuity: float = 1.3
    avg_speed_kmh: float = 18.0


DEFAULT_PARAMS = EngineParams()


@dataclass(frozen=True)
class YellowFallback:
    """Least-squares yellow tariff: total = base + a*km + b*min, in dollars."""

    base: float
    per_km: float
    per_minute: float

    def predict_cents(self, distance_km: float, duration_min: float) -> int:
        dollars = self.base + self.per_km * distance_km + self.per_minute * duration_min
        return max(0, to_cents(dollars))


def fit_yellow_fallback(records: list[TripRecord]) -> YellowFallback:
    """Fit the cold-route tariff on every ingested trip.

    Rank deficiency (e.g. all trips identical) resolves to the minimum-norm
    solution, which still reproduces the observed prices.
    """
    if not records:
        raise EmptyInputError("cannot fit a fallback tariff on zero trips")
    design = np.array([[1.0, r.trip_distance_km, r.duration_min] for r in records])
    target = np.array([r.total_amount for r in records])
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return YellowFallback(base=float(coef[0]), per_km=float(coef[1]), per_minute=float(coef[2]))


def fit_fallback_from_od(od: ODIndex) -> YellowFallback:
    """Fit the cold-route tariff from an OD snapshot alone.

    Buckets enter as their means weighted by trip count, which drops the
    within-bucket spread; good enough for a fallback, and the only option
    when raw trips are gone.
    """
    rows = list(od.items())
    if not rows:
        raise EmptyInputError("cannot fit a fallback tariff on an empty index")
    weights = np.sqrt(np.array([s.trip_count for s in rows], dtype=float))
    design = np.array([[1.0, s.mean_distance, s.mean_duration] for s in rows])
    target = np.array([s.mean_total for s in rows])
    coef, _, _, _ = np.linalg.lstsq(design * weights[:, None], target * weights, rcond=None)
    return YellowFallback(base=float(coef[0]), per_km=float(coef[1]), per_minute=float(coef[2]))


def estimate_uber_base_cents(distance_km: float, duration_min: float, card: RateCard) -> int:
    """Un-surged competitor price: max(minimum fare, linear tariff)."""
    if distance_km < 0 or duration_min < 0:
        raise InvalidBaseError("distance and duration must be nonnegative")
    dollars = card.per_km * distance_km + card.per_minute * duration_min
    return max(to_cents(card.minimum_fare), to_cents(dollars))


def estimate_uber_base(distance_km: float, duration_min: float, card: RateCard) -> float:
    return from_cents(estimate_uber_base_cents(distance_km, duration_min, card))


def route_leg(origin: tuple[float, float], destination: tuple[float, float],
              od: ODIndex, params: EngineParams = DEFAULT_PARAMS) -> tuple[float, float]:
    """(distance_km, duration_min) for a journey: observed bucket means when
    the route is warm, straight-line distance times circuity at the
    configured speed when cold."""
    try:
        bucket = od.bucket(od.spec.cell_of(*origin), od.spec.cell_of(*destination))
    except OutOfGridError:
        bucket = None
    if bucket is not None and bucket.trip_count > 0:
        n = bucket.trip_count
        return bucket.distance_km / n, bucket.duration_min / n
    distance = haversine_km(origin[0], origin[1], destination[0], destination[1]) * params.circuity
    return distance, distance / params.avg_speed_kmh * 60.0


def uber_base_cents_for_route(origin: tuple[float, float], destination: tuple[float, float],
                              od: ODIndex, card: RateCard = UBERX_NYC,
                              params: EngineParams = DEFAULT_PARAMS) -> int:
    """Un-surged competitor price of a concrete journey."""
    distance, duration = route_leg(origin, destination, od, params)
    return estimate_uber_base_cents(distance, duration, card)


def make_uber_base_fn(od: ODIndex, card: RateCard = UBERX_NYC,
                      params: EngineParams = DEFAULT_PARAMS):
    """Bind the base tariff for use as a provider's base_of callable."""
    def base_of(origin: tuple[float, float], destination: tuple[float, float]) -> int:
        return uber_base_cents_for_route(origin, destination, od, card, params)
    return base_of


def estimate_yellow(origin: tuple[float, float], destination: tuple[float, float],
                    od: ODIndex, params: EngineParams = DEFAULT_PARAMS,
                    fallback: YellowFallback | None = None) -> PriceQuote:
    """Quote the yellow price for a journey from the OD history.

    Raises OutOfGridError for coordinates outside the index grid, and
    QuoteUnavailableError when the bucket is cold and no fallback is fitted.
    """
    o_cell = od.spec.cell_of(*origin)
    d_cell = od.spec.cell_of(*destination)
    bucket = od.bucket(o_cell, d_cell)
    if bucket is not None and bucket.trip_count >= params.min_samples:
        cents = int(round(bucket.total_cents / bucket.trip_count))
        return PriceQuote.point(PROVIDER_YELLOW, cents, source=SOURCE_HISTORICAL)
    if fallback is None:
        raise QuoteUnavailableError("no trips on this route and no fallback tariff fitted")
    distance = haversine_km(origin[0], origin[1], destination[0], destination[1]) * params.circuity
    duration = distance / params.avg_speed_kmh * 60.0
    cents = fallback.predict_cents(distance, duration)
    return PriceQuote.point(PROVIDER_YELLOW, cents, source=SOURCE_FALLBACK)


def quote_uber(origin: tuple[float, float], destination: tuple[float, float],
               provider: PriceProvider, when: datetime | None = None) -> PriceQuote:
    """Fetch the competitor's [min, max] quote and reduce it to a midpoint."""
    quote = provider.quote(origin, destination, when)
    if quote.provider != PROVIDER_UBER:
        raise QuoteUnavailableError(f"provider answered for {quote.provider!r}")
    return quote


def declare_winner(yellow: PriceQuote, uber: PriceQuote) -> tuple[str, int]:
    """Winner by the sign of yellow mean minus competitor mean, in cents."""
    delta = yellow.mean_cents - uber.mean_cents
    if delta > 0:
        return WINNER_UBER, delta
    if delta < 0:
        return WINNER_YELLOW, delta
    return WINNER_TIE, 0


class FareEngine:
    """Both estimators plus the winner call behind one pure-query facade.

    All state (OD index, fallback tariff, provider) is frozen at construction;
    instances are safe to share across threads.
    """

    def __init__(self, od: ODIndex, provider: PriceProvider,
                 card: RateCard = UBERX_NYC, params: EngineParams = DEFAULT_PARAMS,
                 fallback: YellowFallback | None = None):
        self.od = od
        self.provider = provider
        self.card = card
        self.params = params
        self.fallback = fallback

    @classmethod
    def from_records(cls, records: list[TripRecord], od: ODIndex, provider: PriceProvider,
                     card: RateCard = UBERX_NYC, params: EngineParams = DEFAULT_PARAMS) -> "FareEngine":
        return cls(od, provider, card, params, fallback=fit_yellow_fallback(records))

    def estimate_yellow(self, origin: tuple[float, float],
                        destination: tuple[float, float]) -> PriceQuote:
        return estimate_yellow(origin, destination, self.od, self.params, self.fallback)

    def quote_uber(self, origin: tuple[float, float], destination: tuple[float, float],
                   when: datetime | None = None) -> PriceQuote:
        return quote_uber(origin, destination, self.provider, when)

    def compare(self, origin: tuple[float, float], destination: tuple[float, float],
                when: datetime | None = None) -> ComparisonResult:
        journey = Journey(
            origin_lat=origin[0], origin_lon=origin[1],
            dest_lat=destination[0], dest_lon=destination[1],
            origin_cell=self.od.spec.cell_of(*origin),
            dest_cell=self.od.spec.cell_of(*destination),
        )
        yellow = self.estimate_yellow(origin, destination)
        uber = self.quote_uber(origin, destination, when)
        winner, delta = declare_winner(yellow, uber)
        return ComparisonResult(journey=journey, yellow_quote=yellow, uber_quote=uber,
                                winner=winner, delta_cents=delta)

"""HTTP/JSON service: price estimates, surge heatmap, and usage statistics.

Read endpoints are pure queries over immutable engine state, so they are
safe under concurrency; the query log is the single mutable resource and its
appends are serialized behind a lock.  Monetary JSON fields are two-decimal
strings, never floats.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, model_validator

from .errors import EmptyInputError, OutOfGridError, QuoteUnavailableError
from .fares import ComparisonResult, FareEngine, PriceQuote
from .grid import CellRect
from .money import fmt_dollars
from .savings import (DEFAULT_TZ, QueryLogEntry, append_query_log,
                      evaluate_all_strategies, query_frequency_stats,
                      read_query_log)
from .surge import AreaSurgeStats

API_PREFIX = "/v1"
LOG_WARNING = '199 faregrid "query log write failed"'


def load_gazetteer(path: str | Path) -> dict[str, tuple[float, float]]:
    """name -> (lat, lon) from a local CSV; replaces external geocoding."""
    out: dict[str, tuple[float, float]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["name"].strip()] = (float(row["lat"]), float(row["lon"]))
    return out


class EndpointIn(BaseModel):
    lat: float | None = None
    lon: float | None = None
    name: str | None = None

    @model_validator(mode="after")
    def _check(self):
        has_coords = self.lat is not None and self.lon is not None
        if not has_coords and self.name is None:
            raise ValueError("endpoint needs lat+lon or a name")
        return self


class EstimateIn(BaseModel):
    origin: EndpointIn
    destination: EndpointIn
    when: datetime | None = None
    user_id: str = "anonymous"


class ServiceState:
    """Engine plus the mutable bits: query log and reloadable index."""

    def __init__(self, engine: FareEngine, log_path: str | Path,
                 surge_stats: list[AreaSurgeStats] | None = None,
                 region: CellRect | None = None,
                 gazetteer: dict[str, tuple[float, float]] | None = None,
                 tz: str = DEFAULT_TZ, provider_mode: str = "synthetic"):
        self.engine = engine
        self.log_path = Path(log_path)
        self.surge_stats = surge_stats
        self.region = region
        self.gazetteer = gazetteer or {}
        self.tz = tz
        self.provider_mode = provider_mode
        self._log_lock = threading.Lock()

    def swap_engine(self, engine: FareEngine) -> None:
        """Atomic index reload; in-flight requests keep the old engine."""
        self.engine = engine

    def log_query(self, entry: QueryLogEntry) -> bool:
        """Durable append; returns False when the write failed."""
        try:
            with self._log_lock:
                append_query_log(self.log_path, entry)
            return True
        except OSError:
            return False


def _resolve(endpoint: EndpointIn, state: ServiceState) -> tuple[float, float]:
    if endpoint.lat is not None and endpoint.lon is not None:
        return endpoint.lat, endpoint.lon
    coords = state.gazetteer.get(endpoint.name.strip())
    if coords is None:
        raise HTTPException(status_code=422, detail={
            "code": "unknown_place", "message": f"no such place: {endpoint.name!r}"})
    return coords


def _quote_json(quote: PriceQuote) -> dict:
    return {
        "min": fmt_dollars(quote.min_cents),
        "max": fmt_dollars(quote.max_cents),
        "mean": fmt_dollars(quote.mean_cents),
        "multiplier": round(quote.multiplier, 4),
        "source": quote.source,
    }


def _estimate_json(result: ComparisonResult) -> dict:
    j = result.journey
    return {
        "origin": {"lat": j.origin_lat, "lon": j.origin_lon,
                   "cell": {"row": j.origin_cell.row, "col": j.origin_cell.col}},
        "destination": {"lat": j.dest_lat, "lon": j.dest_lon,
                        "cell": {"row": j.dest_cell.row, "col": j.dest_cell.col}},
        "yellow": _quote_json(result.yellow_quote),
        "uber": _quote_json(result.uber_quote),
        "winner": result.winner,
        "delta": fmt_dollars(result.delta_cents),
        "savings": fmt_dollars(abs(result.delta_cents)),
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="faregrid", docs_url=None, redoc_url=None)
    app.state.faregrid = state

    @app.get(f"{API_PREFIX}/health")
    def health() -> dict:
        return {
            "status": "ok",
            "index_trips": state.engine.od.trip_count,
            "provider": state.provider_mode,
        }

    @app.post(f"{API_PREFIX}/estimate")
    def estimate(body: EstimateIn) -> JSONResponse:
        origin = _resolve(body.origin, state)
        destination = _resolve(body.destination, state)
        when = body.when
        try:
            result = state.engine.compare(origin, destination, when)
        except OutOfGridError as exc:
            raise HTTPException(status_code=422, detail={
                "code": "out_of_grid", "message": str(exc)})
        except QuoteUnavailableError as exc:
            raise HTTPException(status_code=503, detail={
                "code": "provider_unavailable", "message": str(exc)})

        entry = QueryLogEntry(
            user_id=body.user_id,
            timestamp=when if when is not None else datetime.now(timezone.utc),
            origin=origin,
            destination=destination,
            yellow_cents=result.yellow_quote.mean_cents,
            uber_cents=result.uber_quote.mean_cents,
            winner=result.winner,
        )
        logged = state.log_query(entry)
        payload = _estimate_json(result)
        headers = {} if logged else {"Warning": LOG_WARNING}
        return JSONResponse(content=payload, headers=headers)

    @app.get(f"{API_PREFIX}/surge/heatmap")
    def heatmap(k: int | None = None) -> dict:
        if state.surge_stats is None:
            raise HTTPException(status_code=404, detail={
                "code": "no_surge_stats", "message": "no surge statistics loaded"})
        ordered = sorted(state.surge_stats,
                         key=lambda s: (-s.avg_multiplier, s.cell))
        if k is not None:
            if k < 1:
                raise HTTPException(status_code=422, detail={
                    "code": "bad_k", "message": "k must be >= 1"})
            ordered = ordered[:k]
        cells = [{"row": s.cell.row, "col": s.cell.col,
                  "avg_multiplier": round(s.avg_multiplier, 6),
                  "route_count": s.route_count} for s in ordered]
        payload: dict = {"cells": cells, "count": len(cells)}
        if state.region is not None:
            payload["bounds"] = {
                "row0": state.region.row0, "col0": state.region.col0,
                "n_rows": state.region.n_rows, "n_cols": state.region.n_cols,
            }
        return payload

    @app.get(f"{API_PREFIX}/stats/queries")
    def stats_queries() -> dict:
        log = read_query_log(state.log_path) if state.log_path.exists() else []
        stats = query_frequency_stats(log, state.tz)
        return {
            "total_queries": len(log),
            "unique_users": len(stats.per_user_counts),
            "mean_queries_per_user": round(stats.mean_queries_per_user, 6),
            "histogram": [int(c) for c in stats.histogram.counts],
            "daily_profile": [round(float(v), 6) for v in stats.daily_profile],
            "cdf": [[int(v), round(frac, 6)] for v, frac in stats.cdf],
        }

    @app.get(f"{API_PREFIX}/strategies")
    def strategies() -> dict:
        log = read_query_log(state.log_path) if state.log_path.exists() else []
        try:
            evals = evaluate_all_strategies(log)
        except EmptyInputError:
            raise HTTPException(status_code=404, detail={
                "code": "empty_log", "message": "no queries logged yet"})
        return {"strategies": [
            {"strategy": name,
             "mean_cost": fmt_dollars(int(round(ev.mean_cost_cents))),
             "median_cost": fmt_dollars(int(round(ev.median_cost_cents)))}
            for name, ev in evals.items()
        ]}

    return app

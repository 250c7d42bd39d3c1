"""Taxi vs ride-hail price comparison toolkit.

Ingests raw trip/fare files into an origin-destination fare index, quotes
both services for a journey, measures surge behaviour from recorded price
logs, and evaluates how well area demand signals predict surge.
"""

from .errors import (
    AlignmentError,
    DegenerateWeightsError,
    EmptyInputError,
    EmptyJoinError,
    FaregridError,
    HeaderError,
    InvalidBaseError,
    OutOfGridError,
    QuoteUnavailableError,
    UndefinedCorrelationError,
    UndefinedNDCGError,
)
from .fares import (
    FareEngine,
    PriceQuote,
    RateCard,
    UBERX_NYC,
    YellowFallback,
    estimate_uber_base_cents,
    estimate_yellow,
    fit_yellow_fallback,
)
from .geo import haversine_km
from .grid import (
    ANALYSIS_GRID,
    APP_GRID,
    CellIndex,
    CellRect,
    GridSpec,
    ODIndex,
    aggregate_od_stats,
)
from .ingest import IngestConfig, IngestReport, TripRecord, ingest_files
from .predict import (
    AreaFeatureRow,
    RegressionTree,
    build_features,
    evaluate_rows,
    fit_tree,
    loo_evaluate,
    ndcg_at_k,
)
from .savings import (
    QueryLogEntry,
    delta_distribution,
    evaluate_all_strategies,
    hourly_winner_stripes,
    query_frequency_stats,
)
from .surge import (
    ReplayLog,
    Route,
    SurgeSeries,
    SyntheticProvider,
    area_surge_stats,
    build_surge_matrix,
    controlled_experiment,
    pearson_r,
    surge_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "ANALYSIS_GRID",
    "APP_GRID",
    "AlignmentError",
    "AreaFeatureRow",
    "CellIndex",
    "CellRect",
    "DegenerateWeightsError",
    "EmptyInputError",
    "EmptyJoinError",
    "FareEngine",
    "FaregridError",
    "GridSpec",
    "HeaderError",
    "IngestConfig",
    "IngestReport",
    "InvalidBaseError",
    "ODIndex",
    "OutOfGridError",
    "PriceQuote",
    "QueryLogEntry",
    "QuoteUnavailableError",
    "RateCard",
    "RegressionTree",
    "ReplayLog",
    "Route",
    "SurgeSeries",
    "SyntheticProvider",
    "TripRecord",
    "UBERX_NYC",
    "UndefinedCorrelationError",
    "UndefinedNDCGError",
    "YellowFallback",
    "aggregate_od_stats",
    "area_surge_stats",
    "build_features",
    "build_surge_matrix",
    "controlled_experiment",
    "delta_distribution",
    "estimate_uber_base_cents",
    "estimate_yellow",
    "evaluate_all_strategies",
    "evaluate_rows",
    "fit_tree",
    "fit_yellow_fallback",
    "haversine_km",
    "hourly_winner_stripes",
    "ingest_files",
    "loo_evaluate",
    "ndcg_at_k",
    "pearson_r",
    "query_frequency_stats",
    "surge_fraction",
    "__version__",
]

"""Area surge prediction: feature assembly, a depth-capped regression tree,
leave-one-out evaluation, and NDCG ranking quality.

The tree is grown greedily on variance reduction with deterministic
tie-breaking (lower feature index, then lower threshold), so a given training
set always yields byte-identical trees.  The hot loops are compiled with
numba: leave-one-out refits the tree once per row, which pure Python cannot
do inside the time budget on a single core.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .errors import (EmptyInputError, EmptyJoinError, UndefinedNDCGError)
from .grid import CellIndex, GridSpec, ODIndex
from .surge import AreaSurgeStats, pearson_r

FEATURES = ("yellow_trip_count", "fsq_places", "fsq_checkins", "fsq_travel_spots")

FEATURE_LABELS = {
    "yellow_trip_count": "yellow_trips",
    "fsq_places": "places",
    "fsq_checkins": "checkins",
    "fsq_travel_spots": "travel_spots",
}

DEFAULT_TRAVEL_CATEGORIES = frozenset({
    "travel", "transport", "airport", "train_station", "bus_station", "ferry",
})

DEFAULT_MAX_DEPTH = 20
DEFAULT_MIN_LEAF = 1
DEFAULT_K = 100


@dataclass(frozen=True)
class AreaFeatureRow:
    """Demand features and the surge target for one analysis cell."""

    cell: CellIndex
    yellow_trip_count: int
    fsq_places: int
    fsq_checkins: int
    fsq_travel_spots: int
    target: float
    missing: tuple[str, ...] = ()

    def __post_init__(self):
        if min(self.yellow_trip_count, self.fsq_places,
               self.fsq_checkins, self.fsq_travel_spots) < 0:
            raise ValueError("feature counts must be nonnegative")
        if self.target < 1.0 - 1e-9:
            raise ValueError(f"target multiplier below 1: {self.target}")

    def features(self) -> tuple[float, ...]:
        return (float(self.yellow_trip_count), float(self.fsq_places),
                float(self.fsq_checkins), float(self.fsq_travel_spots))


def feature_matrix(rows: Sequence[AreaFeatureRow]) -> tuple[np.ndarray, np.ndarray, list[CellIndex]]:
    """(X, y, cell ids) with feature columns in FEATURES order."""
    if not rows:
        raise EmptyInputError("no feature rows")
    X = np.array([r.features() for r in rows], dtype=np.float64)
    y = np.array([r.target for r in rows], dtype=np.float64)
    return X, y, [r.cell for r in rows]


# ---------------------------------------------------------------------------
# Feature assembly from the raw inputs.

def _read_venues(venue_file: str | Path) -> list[dict]:
    with Path(venue_file).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _read_checkins(checkin_file: str | Path) -> dict[str, int]:
    counts: dict[str, int] = {}
    with Path(checkin_file).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            counts[row["venue_id"]] = counts.get(row["venue_id"], 0) + int(row["checkins"])
    return counts


def build_features(od: ODIndex, venue_file: str | Path, checkin_file: str | Path,
                   surge: Sequence[AreaSurgeStats], spec: GridSpec | None = None,
                   travel_categories: frozenset[str] = DEFAULT_TRAVEL_CATEGORIES,
                   ) -> list[AreaFeatureRow]:
    """One row per area with surge ground truth.

    Yellow counts come from trips leaving the area in the OD index; venue
    counts and check-ins from the venue files.  Areas absent from a source
    get zeros there, flagged in `missing`.
    """
    spec = spec if spec is not None else od.spec

    trips_by_cell: dict[CellIndex, int] = {}
    for stats in od.items():
        trips_by_cell[stats.origin] = trips_by_cell.get(stats.origin, 0) + stats.trip_count

    checkins_by_venue = _read_checkins(checkin_file)
    places: dict[CellIndex, int] = {}
    checkins: dict[CellIndex, int] = {}
    travel: dict[CellIndex, int] = {}
    for venue in _read_venues(venue_file):
        try:
            cell = spec.cell_of(float(venue["lat"]), float(venue["lon"]))
        except Exception:
            continue  # venues outside the grid carry no area signal
        places[cell] = places.get(cell, 0) + 1
        checkins[cell] = checkins.get(cell, 0) + checkins_by_venue.get(venue["venue_id"], 0)
        if venue["category"].strip().lower() in travel_categories:
            travel[cell] = travel.get(cell, 0) + 1

    rows = []
    any_overlap = False
    for stats in surge:
        cell = stats.cell
        missing = []
        if cell not in trips_by_cell:
            missing.append("yellow_trip_count")
        if cell not in places:
            missing.append("fsq")
        if cell in trips_by_cell or cell in places:
            any_overlap = True
        rows.append(AreaFeatureRow(
            cell=cell,
            yellow_trip_count=trips_by_cell.get(cell, 0),
            fsq_places=places.get(cell, 0),
            fsq_checkins=checkins.get(cell, 0),
            fsq_travel_spots=travel.get(cell, 0),
            target=stats.avg_multiplier,
            missing=tuple(missing),
        ))
    if rows and not any_overlap:
        raise EmptyJoinError("no feature source overlaps any surge area")
    return rows


FEATURE_FILE_HEADER = ["row", "col", *FEATURES, "target", "missing"]


def write_feature_rows(path: str | Path, rows: Sequence[AreaFeatureRow]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_FILE_HEADER)
        for r in rows:
            writer.writerow([r.cell.row, r.cell.col, r.yellow_trip_count,
                             r.fsq_places, r.fsq_checkins, r.fsq_travel_spots,
                             repr(r.target), "|".join(r.missing)])


def read_feature_rows(path: str | Path) -> list[AreaFeatureRow]:
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append(AreaFeatureRow(
                cell=CellIndex(int(raw["row"]), int(raw["col"])),
                yellow_trip_count=int(raw["yellow_trip_count"]),
                fsq_places=int(raw["fsq_places"]),
                fsq_checkins=int(raw["fsq_checkins"]),
                fsq_travel_spots=int(raw["fsq_travel_spots"]),
                target=float(raw["target"]),
                missing=tuple(raw["missing"].split("|")) if raw["missing"] else (),
            ))
    return rows


# ---------------------------------------------------------------------------
# Regression tree.  Greedy variance-reduction splits; candidate thresholds are
# midpoints between consecutive distinct sorted feature values; equal-scoring
# candidates resolve to the lowest feature index, then the lowest threshold.

@njit(cache=True)
def _grow_tree(X, y, max_depth, min_leaf):
    n, n_features = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes, dtype=np.float64)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes, dtype=np.float64)
    count = np.zeros(max_nodes, dtype=np.int64)
    depth_of = np.zeros(max_nodes, dtype=np.int64)

    idx = np.arange(n)
    stack = np.empty((max_nodes, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    next_node = 1

    xbuf = np.empty(n, dtype=np.float64)
    tmp = np.empty(n, dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        total = 0.0
        for p in range(start, end):
            total += y[idx[p]]
        value[node] = total / m
        count[node] = m
        depth_of[node] = depth

        if depth >= max_depth or m < 2 * min_leaf or m < 2:
            continue
        ymin = y[idx[start]]
        ymax = ymin
        for p in range(start + 1, end):
            v = y[idx[p]]
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        if ymin == ymax:
            continue

        # Unsplit score; a candidate must strictly beat it, so ties keep the
        # first candidate scanned: lowest feature, then lowest threshold.
        best_score = total * total / m
        best_feat = -1
        best_thr = 0.0
        for j in range(n_features):
            for p in range(m):
                xbuf[p] = X[idx[start + p], j]
            order = np.argsort(xbuf[:m], kind="mergesort")
            sy = 0.0
            for p in range(m - 1):
                o = order[p]
                sy += y[idx[start + o]]
                x_here = xbuf[o]
                x_next = xbuf[order[p + 1]]
                if x_here == x_next:
                    continue
                nl = p + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                score = sy * sy / nl + (total - sy) * (total - sy) / nr
                if score > best_score:
                    thr = 0.5 * (x_here + x_next)
                    if thr >= x_next or thr < x_here:
                        # adjacent floats: midpoint rounded onto a value
                        thr = x_here
                    best_score = score
                    best_feat = j
                    best_thr = thr
        if best_feat < 0:
            continue

        nl = 0
        for p in range(start, end):
            if X[idx[p], best_feat] <= best_thr:
                tmp[nl] = idx[p]
                nl += 1
        k = nl
        for p in range(start, end):
            if X[idx[p], best_feat] > best_thr:
                tmp[k] = idx[p]
                k += 1
        for p in range(m):
            idx[start + p] = tmp[p]

        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = next_node
        right[node] = next_node + 1
        stack[top, 0] = next_node
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = next_node + 1
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        next_node += 2

    return feature[:next_node], threshold[:next_node], left[:next_node], \
        right[:next_node], value[:next_node], count[:next_node], depth_of[:next_node]


@njit(cache=True)
def _predict_many(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def _loo_predict(X, y, max_depth, min_leaf):
    n, f = X.shape
    preds = np.empty(n, dtype=np.float64)
    Xi = np.empty((n - 1, f), dtype=np.float64)
    yi = np.empty(n - 1, dtype=np.float64)
    for i in range(n):
        k = 0
        for r in range(n):
            if r == i:
                continue
            for c in range(f):
                Xi[k, c] = X[r, c]
            yi[k] = y[r]
            k += 1
        feature, threshold, left, right, value, _, _ = _grow_tree(Xi, yi, max_depth, min_leaf)
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        preds[i] = value[node]
    return preds


@dataclass(frozen=True)
class RegressionTree:
    """Fitted tree as parallel node arrays; node 0 is the root, feature -1
    marks a leaf whose value is its training-target mean."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    depth_of: np.ndarray
    max_depth: int
    min_leaf: int
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        return int(self.depth_of.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) feature matrix")
        return _predict_many(X, self.feature, self.threshold, self.left, self.right, self.value)

    def predict_row(self, x: Sequence[float]) -> float:
        return float(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])

    def dump(self) -> str:
        """Stable text form; equal trees produce identical bytes."""
        lines = [f"tree n_features={self.n_features} max_depth={self.max_depth} "
                 f"min_leaf={self.min_leaf} n_nodes={self.n_nodes}"]
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                lines.append(f"{i} split f={int(self.feature[i])} "
                             f"thr={float(self.threshold[i])!r} n={int(self.count[i])} "
                             f"l={int(self.left[i])} r={int(self.right[i])}")
            else:
                lines.append(f"{i} leaf value={float(self.value[i])!r} n={int(self.count[i])}")
        return "\n".join(lines) + "\n"


def fit_tree(X: np.ndarray, y: np.ndarray,
             max_depth: int = DEFAULT_MAX_DEPTH, min_leaf: int = DEFAULT_MIN_LEAF) -> RegressionTree:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, f) and y length n")
    if X.shape[0] == 0:
        raise EmptyInputError("empty training set")
    if max_depth < 0 or min_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
    arrays = _grow_tree(X, y, max_depth, min_leaf)
    return RegressionTree(*arrays, max_depth=max_depth, min_leaf=min_leaf,
                          n_features=X.shape[1])


def fit_tree_rows(rows: Sequence[AreaFeatureRow],
                  max_depth: int = DEFAULT_MAX_DEPTH,
                  min_leaf: int = DEFAULT_MIN_LEAF) -> RegressionTree:
    X, y, _ = feature_matrix(rows)
    return fit_tree(X, y, max_depth, min_leaf)


@dataclass(frozen=True)
class LOOResult:
    predictions: np.ndarray
    targets: np.ndarray
    r: float


def loo_evaluate(X: np.ndarray, y: np.ndarray,
                 max_depth: int = DEFAULT_MAX_DEPTH,
                 min_leaf: int = DEFAULT_MIN_LEAF) -> LOOResult:
    """Leave-one-out: refit without each row, predict it, correlate.

    Row order cannot affect the predictions (each fit sees the same set).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.shape[0] < 3:
        raise EmptyInputError("leave-one-out needs at least 3 rows")
    preds = _loo_predict(X, y, max_depth, min_leaf)
    return LOOResult(predictions=preds, targets=y.copy(), r=pearson_r(preds, y))


def warm_up() -> None:
    """Trigger numba compilation outside any timed path."""
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]])
    y = np.array([0.0, 1.0, 2.0, 3.0])
    tree = fit_tree(X, y, max_depth=3, min_leaf=1)
    tree.predict(X)
    _loo_predict(X, y, 3, 1)


# ---------------------------------------------------------------------------
# Ranking quality.

def rank_by(values: Mapping, descending: bool = True) -> list:
    """Item ids sorted by value (descending by default), ties by id."""
    sign = -1.0 if descending else 1.0
    return sorted(values, key=lambda a: (sign * values[a], a))


def ndcg_at_k(ranking: Sequence, gains: Mapping, k: int = DEFAULT_K) -> float:
    """NDCG with DCG = sum over the top k of gain / log2(rank + 1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    gain_values = [float(g) for g in gains.values()]
    if any(g < 0 for g in gain_values):
        raise ValueError("gains must be nonnegative")
    if not any(g > 0 for g in gain_values):
        raise UndefinedNDCGError("all gains are zero; ranking quality undefined")

    def dcg(ordered_gains: Iterable[float]) -> float:
        return sum(g / math.log2(i + 2) for i, g in enumerate(ordered_gains) if i < k)

    actual = dcg(float(gains.get(a, 0.0)) for a in ranking)
    ideal = dcg(sorted(gain_values, reverse=True))
    return actual / ideal


def gains_from_targets(ids: Sequence, targets: Sequence[float],
                       gain: str = "excess") -> dict:
    """Per-area relevance: multiplier excess over 1.0 (floored at zero), or
    the raw multiplier when gain="raw"."""
    if gain == "excess":
        return {a: max(0.0, float(t) - 1.0) for a, t in zip(ids, targets)}
    if gain == "raw":
        return {a: float(t) for a, t in zip(ids, targets)}
    raise ValueError(f"unknown gain mode {gain!r}")


def random_baseline_ndcg(gains: Mapping, k: int = DEFAULT_K,
                         trials: int = 1000, seed: int = 0) -> float:
    """Monte-Carlo mean NDCG of uniformly random rankings."""
    ids = sorted(gains)
    rng = np.random.default_rng(seed)
    scores = []
    for _ in range(trials):
        order = [ids[i] for i in rng.permutation(len(ids))]
        scores.append(ndcg_at_k(order, gains, k))
    return float(np.mean(scores))


@dataclass(frozen=True)
class EvaluationReport:
    """Per-signal and model scores, shaped like a two-column table."""

    k: int
    pearson: dict[str, float]
    ndcg: dict[str, float]
    baseline_ndcg: float
    loo: LOOResult | None = field(repr=False, default=None)

    def table(self) -> list[tuple[str, float, float]]:
        names = [*FEATURE_LABELS.values(), "model"]
        return [(name, self.pearson[name], self.ndcg[name]) for name in names]


def evaluate_rows(rows: Sequence[AreaFeatureRow], k: int = DEFAULT_K,
                  max_depth: int = DEFAULT_MAX_DEPTH, min_leaf: int = DEFAULT_MIN_LEAF,
                  gain: str = "excess", baseline_trials: int = 1000,
                  baseline_seed: int = 0) -> EvaluationReport:
    """Full evaluation: single-feature baselines vs the leave-one-out tree."""
    X, y, ids = feature_matrix(rows)
    gains = gains_from_targets(ids, y, gain)

    pearson: dict[str, float] = {}
    ndcg: dict[str, float] = {}
    for col, name in enumerate(FEATURES):
        label = FEATURE_LABELS[name]
        pearson[label] = pearson_r(X[:, col], y)
        ranking = rank_by({a: float(X[i, col]) for i, a in enumerate(ids)})
        ndcg[label] = ndcg_at_k(ranking, gains, k)

    loo = loo_evaluate(X, y, max_depth, min_leaf)
    pearson["model"] = loo.r
    model_ranking = rank_by({a: float(loo.predictions[i]) for i, a in enumerate(ids)})
    ndcg["model"] = ndcg_at_k(model_ranking, gains, k)

    baseline = random_baseline_ndcg(gains, k, baseline_trials, baseline_seed)
    return EvaluationReport(k=k, pearson=pearson, ndcg=ndcg,
                            baseline_ndcg=baseline, loo=loo)

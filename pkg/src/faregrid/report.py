"""Report rendering: delimited tables plus matplotlib figures.

Every report writes machine-readable delimited output and a PNG of the same
data side by side, so results can be eyeballed and diffed.  Uses the Agg
backend; safe on headless machines.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .grid import CellRect  # noqa: E402
from .money import from_cents  # noqa: E402
from .predict import EvaluationReport  # noqa: E402
from .savings import (DeltaSummary, QueryFrequencyStats, StrategyEvaluation,  # noqa: E402
                      stripes_string)
from .surge import (AreaSurgeStats, ExperimentResult, heatmap_raster,  # noqa: E402
                    multiplier_histogram)

STRIPE_COLORS = {"yellow": "#f5c518", "uber": "#1a1a1a",
                 "tie": "#9e9e9e", "no_data": "#ffffff"}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# Surge

def write_heatmap_csv(stats: Sequence[AreaSurgeStats], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "avg_multiplier", "route_count"])
        for s in sorted(stats, key=lambda s: s.cell):
            writer.writerow([s.cell.row, s.cell.col, f"{s.avg_multiplier:.6f}", s.route_count])
    return path


def save_heatmap_figure(stats: Sequence[AreaSurgeStats], region: CellRect,
                        path: str | Path) -> Path:
    raster = heatmap_raster(stats, region)
    fig, ax = plt.subplots(figsize=(7, 6))
    image = ax.imshow(raster, origin="lower", cmap="YlOrRd",
                      vmin=1.0, vmax=max(1.2, float(raster.max())))
    fig.colorbar(image, ax=ax, label="average surge multiplier")
    ax.set_xlabel("cell column")
    ax.set_ylabel("cell row")
    ax.set_title("Area surge heatmap")
    return _finish(fig, path)


def save_multiplier_histogram(stats: Sequence[AreaSurgeStats], path: str | Path) -> Path:
    edges, counts = multiplier_histogram(stats)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge",
           color="#d35400", edgecolor="white")
    ax.set_xlabel("average surge multiplier")
    ax.set_ylabel("areas")
    ax.set_title("Distribution of area surge multipliers")
    return _finish(fig, path)


def save_experiment_figure(result: ExperimentResult, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(result.r_matrix, cmap="viridis", vmin=-1.0, vmax=1.0)
    fig.colorbar(image, ax=ax, label="Pearson's r")
    ax.set_xticks(range(len(result.route_ids)))
    ax.set_yticks(range(len(result.route_ids)))
    ax.set_xticklabels(result.route_ids, rotation=45, ha="right", fontsize=7)
    ax.set_yticklabels(result.route_ids, fontsize=7)
    ax.set_title(f"{result.mode}: mean pairwise r = {result.mean_pairwise_r:.3f}")
    return _finish(fig, path)


def write_experiment_csv(result: ExperimentResult, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", result.mode])
        writer.writerow(["mean_pairwise_r", f"{result.mean_pairwise_r:.6f}"])
        writer.writerow(["route_a", "route_b", "r"])
        ids = result.route_ids
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                writer.writerow([ids[i], ids[j], f"{result.r_matrix[i, j]:.6f}"])
    return path


# ---------------------------------------------------------------------------
# Savings

def write_delta_histogram_csv(summary: DeltaSummary, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for bin_index in sorted(summary.histogram):
            low = from_cents(bin_index * summary.bin_cents)
            high = from_cents((bin_index + 1) * summary.bin_cents)
            writer.writerow([f"{low:.2f}", f"{high:.2f}", summary.histogram[bin_index]])
    return path


def save_delta_histogram(summary: DeltaSummary, path: str | Path) -> Path:
    bins = sorted(summary.histogram)
    width = from_cents(summary.bin_cents)
    lows = [from_cents(b * summary.bin_cents) for b in bins]
    counts = [summary.histogram[b] for b in bins]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(lows, counts, width=width, align="edge", color="#2c7fb8", edgecolor="white")
    ax.axvline(0.0, color="#333333", linewidth=1)
    ax.set_xlabel("price difference (yellow minus competitor), dollars")
    ax.set_ylabel("journeys")
    ax.set_title(f"Price differences; mean saving {summary.mean_saving:.2f}")
    return _finish(fig, path)


def save_stripes_figure(stripes: Sequence[str], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 1.6))
    for slot, winner in enumerate(stripes):
        ax.add_patch(plt.Rectangle((slot, 0), 1, 1,
                                   color=STRIPE_COLORS[winner], linewidth=0))
    ax.set_xlim(0, len(stripes))
    ax.set_ylim(0, 1)
    ax.set_yticks([])
    ax.set_xticks(range(0, 169, 24))
    ax.set_xlabel("hour of week")
    ax.set_title("Cheapest provider by hour")
    return _finish(fig, path)


def write_stripes_file(stripes: Sequence[str], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(stripes_string(stripes) + "\n", encoding="utf-8")
    return path


def write_strategies_csv(evals: dict[str, StrategyEvaluation], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "mean_cost", "median_cost"])
        for name, ev in evals.items():
            writer.writerow([name, f"{ev.mean_cost:.2f}", f"{ev.median_cost:.2f}"])
    return path


def write_query_stats_csv(stats: QueryFrequencyStats, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["mean_queries_per_user", f"{stats.mean_queries_per_user:.4f}"])
        writer.writerow(["unique_users", len(stats.per_user_counts)])
        writer.writerow(["total_queries", int(stats.histogram.total)])
        writer.writerow(["slot", "queries"])
        for slot, count in enumerate(stats.histogram.counts):
            writer.writerow([slot, int(count)])
    return path


def save_cdf_figure(stats: QueryFrequencyStats, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    if stats.cdf:
        xs = [v for v, _ in stats.cdf]
        ys = [f for _, f in stats.cdf]
        ax.step(xs, ys, where="post", color="#2c7fb8")
    ax.set_xlabel("queries per user")
    ax.set_ylabel("fraction of users")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"Queries per user (mean {stats.mean_queries_per_user:.2f})")
    return _finish(fig, path)


def save_daily_profile_figure(stats: QueryFrequencyStats, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(24), stats.daily_profile, marker="o", color="#d35400")
    ax.set_xlabel("hour of day")
    ax.set_ylabel("mean queries")
    ax.set_title("Daily query profile")
    return _finish(fig, path)


# ---------------------------------------------------------------------------
# Prediction

def write_evaluation_csv(report: EvaluationReport, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["signal", "pearson_r", f"ndcg_at_{report.k}"])
        for name, r, ndcg in report.table():
            writer.writerow([name, f"{r:.4f}", f"{ndcg:.4f}"])
        writer.writerow(["random_baseline", "", f"{report.baseline_ndcg:.4f}"])
    return path


def save_evaluation_figure(report: EvaluationReport, path: str | Path) -> Path:
    rows = report.table()
    names = [name for name, _, _ in rows]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].barh(names, [r for _, r, _ in rows], color="#2c7fb8")
    axes[0].set_title("Pearson's r (leave-one-out for the model)")
    axes[0].set_xlim(0, 1)
    axes[1].barh(names, [n for _, _, n in rows], color="#d35400")
    axes[1].axvline(report.baseline_ndcg, color="#555555", linestyle="--",
                    label="random baseline")
    axes[1].set_title(f"NDCG@{report.k}")
    axes[1].set_xlim(0, 1)
    axes[1].legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return _finish(fig, path)

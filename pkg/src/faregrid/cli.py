"""Command-line entry points.

Each subcommand wraps one analysis path end to end: read inputs, run the
library, write delimited output and figures.  Everything the service exposes
over HTTP is reachable here without a server.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import fares, ingest, predict, report, sampledata, savings, surge
from .grid import ANALYSIS_GRID, GRID_PRESETS, CellRect, ODIndex, aggregate_od_stats
from .money import fmt_dollars


def _parse_point(text: str) -> tuple[float, float]:
    try:
        lat, lon = text.split(",")
        return float(lat), float(lon)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lat,lon', got {text!r}")


def _parse_when(text: str) -> datetime:
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def _load_config(path: str | None) -> ingest.IngestConfig:
    if path is None:
        return ingest.IngestConfig.nyc_tlc_2013()
    return ingest.IngestConfig.from_json(path)


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    result = ingest.ingest_files(args.trips, args.fares, config, reject_dir=args.reject_dir)
    rep = result.report
    od = aggregate_od_stats(result.records, GRID_PRESETS[args.grid])
    od.meta["built"] = "cli-ingest"
    od.save(args.out)

    print(f"rows_read\t{rep.rows_read}")
    print(f"rows_accepted\t{rep.rows_accepted}")
    print(f"rows_rejected\t{rep.rows_rejected}")
    for reason in sorted(rep.rejection_reasons):
        print(f"reject.{reason}\t{rep.rejection_reasons[reason]}")
    print(f"records\t{len(result.records)}")
    print(f"od_routes\t{len(od)}")
    print(f"od_skipped_out_of_grid\t{od.skipped_out_of_grid}")
    if not rep.check_conservation():
        print("row conservation violated", file=sys.stderr)
        return 1
    return 0


def _engine_from_args(args: argparse.Namespace) -> fares.FareEngine:
    od = ODIndex.load(args.index)
    provider = surge.SyntheticProvider(
        spec=od.spec,
        base_of=fares.make_uber_base_fn(od),
        seed=args.seed,
        pinned_multiplier=args.pin_multiplier,
    )
    return fares.FareEngine(od, provider, fallback=fares.fit_fallback_from_od(od))


def cmd_estimate(args: argparse.Namespace) -> int:
    engine = _engine_from_args(args)
    result = engine.compare(args.origin, args.destination, args.when)
    y, u = result.yellow_quote, result.uber_quote
    print(f"yellow\t{fmt_dollars(y.mean_cents)}\t[{fmt_dollars(y.min_cents)}, "
          f"{fmt_dollars(y.max_cents)}]\t{y.source}")
    print(f"uber\t{fmt_dollars(u.mean_cents)}\t[{fmt_dollars(u.min_cents)}, "
          f"{fmt_dollars(u.max_cents)}]\t{u.source}\tx{u.multiplier:.2f}")
    print(f"winner\t{result.winner}")
    print(f"delta\t{fmt_dollars(result.delta_cents)}")
    return 0


def _read_replay(path: str) -> dict[str, surge.SurgeSeries]:
    return surge.ReplayLog.read(path).series()


def cmd_st(args: argparse.Namespace) -> int:
    series = _read_replay(args.replay)
    entries = savings.read_query_log(args.queries)
    hist = savings.query_frequency_stats(entries, tz=args.tz).histogram
    matrix = surge.build_surge_matrix(series, tz=args.tz)
    st = surge.surge_fraction(matrix, hist.counts)
    avg = sum(surge.avg_surge_multiplier(s) for s in series.values()) / len(series)
    print(f"routes\t{matrix.n_routes}")
    print(f"queries\t{len(entries)}")
    print(f"surge_time_fraction\t{st:.6f}")
    print(f"avg_multiplier\t{avg:.6f}")
    return 0


def cmd_heatmap(args: argparse.Namespace) -> int:
    series = _read_replay(args.replay)
    routes = surge.load_routes(args.routes)
    region = CellRect(*args.region) if args.region else None
    stats = surge.area_surge_stats(series, routes, ANALYSIS_GRID, region)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(report.write_heatmap_csv(stats, out / "heatmap.csv"))
    if region is not None:
        print(report.save_heatmap_figure(stats, region, out / "heatmap.png"))
    print(report.save_multiplier_histogram(stats, out / "multiplier_histogram.png"))

    above = sum(1 for s in stats if s.avg_multiplier > 1.0)
    print(f"areas\t{len(stats)}")
    print(f"areas_above_baseline\t{above}")
    for s in sorted(stats, key=lambda s: (-s.avg_multiplier, s.cell))[:args.top]:
        print(f"top\t{s.cell.row}\t{s.cell.col}\t{s.avg_multiplier:.4f}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    series = _read_replay(args.replay)
    mode = {"origin": surge.MODE_FIXED_ORIGIN,
            "destination": surge.MODE_FIXED_DESTINATION}[args.mode]
    result = surge.controlled_experiment(series.values(), mode)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(report.write_experiment_csv(result, out / f"experiment_{args.mode}.csv"))
    print(report.save_experiment_figure(result, out / f"experiment_{args.mode}.png"))
    print(f"mean_pairwise_r\t{result.mean_pairwise_r:.6f}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    entries = savings.read_query_log(args.queries)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary = savings.delta_distribution(entries)
    print(report.write_delta_histogram_csv(summary, out / "delta_histogram.csv"))
    print(report.save_delta_histogram(summary, out / "delta_histogram.png"))

    stripes = savings.hourly_winner_stripes(entries, tz=args.tz)
    print(report.write_stripes_file(stripes, out / "winner_stripes.txt"))
    print(report.save_stripes_figure(stripes, out / "winner_stripes.png"))

    evals = savings.evaluate_all_strategies(entries)
    print(report.write_strategies_csv(evals, out / "strategies.csv"))

    stats = savings.query_frequency_stats(entries, tz=args.tz)
    print(report.write_query_stats_csv(stats, out / "query_stats.csv"))
    print(report.save_cdf_figure(stats, out / "query_cdf.png"))
    print(report.save_daily_profile_figure(stats, out / "daily_profile.png"))

    print(f"queries\t{summary.count}")
    print(f"mean_delta\t{fmt_dollars(int(round(summary.mean_delta)))}")
    print(f"mean_saving\t{fmt_dollars(int(round(summary.mean_saving)))}")
    for name in savings.STRATEGIES:
        print(f"strategy.{name}\t{evals[name].mean_cost:.2f}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    rows = predict.read_feature_rows(args.features)
    predict.warm_up()
    evaluation = predict.evaluate_rows(rows, k=args.k)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(report.write_evaluation_csv(evaluation, out / "evaluation.csv"))
    print(report.save_evaluation_figure(evaluation, out / "evaluation.png"))

    for name, r, ndcg in evaluation.table():
        print(f"{name}\tr={r:.4f}\tndcg@{args.k}={ndcg:.4f}")
    print(f"random_baseline\tndcg@{args.k}={evaluation.baseline_ndcg:.4f}")
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    predict.warm_up()
    paths = sampledata.build_corpus(args.out, seed=args.seed, n_clean_trips=args.trips)
    manifest = json.loads(paths.manifest.read_text(encoding="utf-8"))
    print(f"corpus\t{paths.root}")
    print(f"st\t{manifest['measured']['st']}")
    print(f"areas_above_one\t{manifest['measured']['areas_above_one']}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceState, create_app, load_gazetteer

    engine = _engine_from_args(args)
    surge_stats = None
    region = CellRect(*args.region) if args.region else None
    if args.replay and args.routes:
        series = _read_replay(args.replay)
        surge_stats = surge.area_surge_stats(series, surge.load_routes(args.routes),
                                             ANALYSIS_GRID, region)
    gazetteer = load_gazetteer(args.gazetteer) if args.gazetteer else None
    state = ServiceState(engine, args.log, surge_stats=surge_stats, region=region,
                         gazetteer=gazetteer)
    uvicorn.run(create_app(state), host=args.host, port=args.port, log_level="warning")
    return 0


def _add_engine_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--index", required=True, help="OD index snapshot")
    sub.add_argument("--seed", type=int, default=0, help="provider seed")
    sub.add_argument("--pin-multiplier", type=float, default=None,
                     help="fix the provider multiplier (testing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faregrid",
                                     description="taxi vs ride-hail price analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate and index trip/fare files")
    p.add_argument("trips")
    p.add_argument("fares")
    p.add_argument("--config", default=None, help="column-map JSON (default: 2013 TLC layout)")
    p.add_argument("--grid", choices=sorted(GRID_PRESETS), default="app")
    p.add_argument("--out", required=True, help="OD index snapshot to write")
    p.add_argument("--reject-dir", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("estimate", help="price one journey both ways")
    _add_engine_args(p)
    p.add_argument("--origin", type=_parse_point, required=True, metavar="LAT,LON")
    p.add_argument("--destination", type=_parse_point, required=True, metavar="LAT,LON")
    p.add_argument("--when", type=_parse_when, default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("st", help="surge time fraction from a replay log")
    p.add_argument("--replay", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--tz", default=savings.DEFAULT_TZ)
    p.set_defaults(func=cmd_st)

    p = sub.add_parser("heatmap", help="per-area surge averages")
    p.add_argument("--replay", required=True)
    p.add_argument("--routes", required=True)
    p.add_argument("--region", type=int, nargs=4, default=None,
                   metavar=("ROW0", "COL0", "NROWS", "NCOLS"))
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("experiment", help="correlation of route surge series")
    p.add_argument("--replay", required=True)
    p.add_argument("--mode", choices=["origin", "destination"], required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="savings report from a query log")
    p.add_argument("--queries", required=True)
    p.add_argument("--tz", default=savings.DEFAULT_TZ)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("predict", help="evaluate demand signals against surge")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, default=predict.DEFAULT_K)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fixtures", help="build the bundled sample corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=sampledata.DATA_SEED)
    p.add_argument("--trips", type=int, default=10_000)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("serve", help="run the HTTP estimate service")
    _add_engine_args(p)
    p.add_argument("--log", required=True, help="query log (JSON lines, appended)")
    p.add_argument("--replay", default=None)
    p.add_argument("--routes", default=None)
    p.add_argument("--region", type=int, nargs=4, default=None,
                   metavar=("ROW0", "COL0", "NROWS", "NCOLS"))
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

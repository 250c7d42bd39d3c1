import csv
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from faregrid import predict, report, savings, surge
from faregrid.grid import CellIndex, CellRect

UTC = timezone.utc
WEEK0 = datetime(2014, 9, 8, 4, 0, tzinfo=UTC)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def area_stats():
    return [surge.AreaSurgeStats(CellIndex(5, 6), 1.41, 3),
            surge.AreaSurgeStats(CellIndex(5, 7), 1.0, 0),
            surge.AreaSurgeStats(CellIndex(6, 6), 2.2, 1)]


@pytest.fixture
def query_entries():
    return [
        savings.QueryLogEntry("a", WEEK0, (40.62, -74.02), (40.64, -74.0),
                              1000, 800, "uber"),
        savings.QueryLogEntry("a", WEEK0 + timedelta(hours=1), (40.62, -74.02),
                              (40.64, -74.0), 700, 900, "yellow"),
        savings.QueryLogEntry("b", WEEK0 + timedelta(hours=2), (40.62, -74.02),
                              (40.64, -74.0), 600, 600, "tie"),
    ]


class TestSurgeOutputs:
    def test_heatmap_csv_is_sorted_with_fixed_precision(self, area_stats, tmp_path):
        path = report.write_heatmap_csv(area_stats, tmp_path / "heatmap.csv")
        rows = read_csv(path)
        assert rows[0] == ["row", "col", "avg_multiplier", "route_count"]
        assert rows[1] == ["5", "6", "1.410000", "3"]
        assert rows[2] == ["5", "7", "1.000000", "0"]
        assert rows[3] == ["6", "6", "2.200000", "1"]

    def test_heatmap_figure_is_png(self, area_stats, tmp_path):
        region = CellRect(5, 6, 2, 2)
        path = report.save_heatmap_figure(area_stats, region, tmp_path / "h.png")
        assert path.read_bytes()[:8] == PNG_MAGIC

    def test_multiplier_histogram_figure(self, area_stats, tmp_path):
        path = report.save_multiplier_histogram(area_stats, tmp_path / "m.png")
        assert path.read_bytes()[:8] == PNG_MAGIC

    def test_experiment_outputs(self, tmp_path):
        result = surge.controlled_experiment(
            [surge.SurgeSeries("a", 1000, ((WEEK0, 1000), (WEEK0 + timedelta(hours=1), 1500),
                                           (WEEK0 + timedelta(hours=2), 2000))),
             surge.SurgeSeries("b", 1000, ((WEEK0, 1000), (WEEK0 + timedelta(hours=1), 1500),
                                           (WEEK0 + timedelta(hours=2), 2000)))],
            surge.MODE_FIXED_ORIGIN)
        csv_path = report.write_experiment_csv(result, tmp_path / "exp.csv")
        rows = read_csv(csv_path)
        assert rows[0] == ["mode", "fixed_origin"]
        assert rows[1] == ["mean_pairwise_r", "1.000000"]
        assert rows[2] == ["route_a", "route_b", "r"]
        assert rows[3] == ["a", "b", "1.000000"]
        png = report.save_experiment_figure(result, tmp_path / "exp.png")
        assert png.read_bytes()[:8] == PNG_MAGIC


class TestSavingsOutputs:
    def test_delta_histogram_csv(self, query_entries, tmp_path):
        summary = savings.delta_distribution(query_entries)
        path = report.write_delta_histogram_csv(summary, tmp_path / "delta.csv")
        rows = read_csv(path)
        assert rows[0] == ["bin_low", "bin_high", "count"]
        # deltas 200, -200, 0 -> bins 2, -2, 0
        assert rows[1] == ["-2.00", "-1.00", "1"]
        assert rows[2] == ["0.00", "1.00", "1"]
        assert rows[3] == ["2.00", "3.00", "1"]
        png = report.save_delta_histogram(summary, tmp_path / "delta.png")
        assert png.read_bytes()[:8] == PNG_MAGIC

    def test_stripes_file_and_figure(self, query_entries, tmp_path):
        stripes = savings.hourly_winner_stripes(query_entries)
        path = report.write_stripes_file(stripes, tmp_path / "stripes.txt")
        text = path.read_text()
        assert text == "BYT" + "N" * 165 + "\n"
        png = report.save_stripes_figure(stripes, tmp_path / "stripes.png")
        assert png.read_bytes()[:8] == PNG_MAGIC

    def test_strategies_csv(self, query_entries, tmp_path):
        evals = savings.evaluate_all_strategies(query_entries)
        path = report.write_strategies_csv(evals, tmp_path / "strategies.csv")
        rows = read_csv(path)
        assert rows[0] == ["strategy", "mean_cost", "median_cost"]
        assert [r[0] for r in rows[1:]] == list(savings.STRATEGIES)
        by_name = {r[0]: float(r[1]) for r in rows[1:]}
        assert by_name["app_driven"] == pytest.approx((800 + 700 + 600) / 3 / 100, abs=0.005)

    def test_query_stats_outputs(self, query_entries, tmp_path):
        stats = savings.query_frequency_stats(query_entries)
        path = report.write_query_stats_csv(stats, tmp_path / "stats.csv")
        rows = read_csv(path)
        assert rows[0] == ["metric", "value"]
        assert rows[1] == ["mean_queries_per_user", "1.5000"]
        assert rows[2] == ["unique_users", "2"]
        assert rows[3] == ["total_queries", "3"]
        assert rows[4] == ["slot", "queries"]
        assert rows[5] == ["0", "1"]
        assert len(rows) == 5 + 168
        for target in ("cdf.png", "daily.png"):
            png = {"cdf.png": report.save_cdf_figure,
                   "daily.png": report.save_daily_profile_figure}[target](
                stats, tmp_path / target)
            assert png.read_bytes()[:8] == PNG_MAGIC


class TestEvaluationOutputs:
    def test_csv_and_figure(self, tmp_path, warm_tree):
        rows = [predict.AreaFeatureRow(CellIndex(0, i), 10 * i, i, i, i, 1.0 + i / 10)
                for i in range(8)]
        evaluation = predict.evaluate_rows(rows, k=4, baseline_trials=10)
        path = report.write_evaluation_csv(evaluation, tmp_path / "eval.csv")
        table = read_csv(path)
        assert table[0] == ["signal", "pearson_r", "ndcg_at_4"]
        assert [r[0] for r in table[1:6]] == ["yellow_trips", "places", "checkins",
                                              "travel_spots", "model"]
        assert table[6][0] == "random_baseline"
        png = report.save_evaluation_figure(evaluation, tmp_path / "eval.png")
        assert png.read_bytes()[:8] == PNG_MAGIC

    def test_directories_are_created(self, area_stats, tmp_path):
        nested = tmp_path / "a" / "b" / "c.png"
        report.save_multiplier_histogram(area_stats, nested)
        assert nested.exists()

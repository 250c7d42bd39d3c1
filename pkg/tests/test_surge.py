from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from faregrid import surge
from faregrid.errors import (AlignmentError, DegenerateWeightsError,
                             EmptyInputError, InvalidBaseError,
                             QuoteUnavailableError, UndefinedCorrelationError)
from faregrid.grid import ANALYSIS_GRID, CellIndex, CellRect

from oracles import pearson_numpy, surge_fraction_loops

UTC = timezone.utc
# Monday 2014-09-08, 04:00 UTC == midnight in New York
WEEK0 = datetime(2014, 9, 8, 4, 0, tzinfo=UTC)


def series(route_id, prices, base=1000, start=WEEK0, step_h=1):
    samples = tuple((start + timedelta(hours=k * step_h), p)
                    for k, p in enumerate(prices))
    return surge.SurgeSeries(route_id=route_id, base_cents=base, samples=samples)


class TestSurgeSeries:
    def test_multipliers_are_price_over_base(self):
        s = series("r", [1000, 1100, 2000])
        assert surge.multiplier_series(s).tolist() == [1.0, 1.1, 2.0]
        assert surge.avg_surge_multiplier(s) == pytest.approx((1.0 + 1.1 + 2.0) / 3)

    def test_nonpositive_base_rejected(self):
        with pytest.raises(InvalidBaseError):
            surge.multiplier_series(series("r", [1000], base=0))

    def test_unordered_samples_rejected(self):
        with pytest.raises(ValueError):
            surge.SurgeSeries(route_id="r", base_cents=1000, samples=(
                (WEEK0 + timedelta(hours=1), 1000), (WEEK0, 1000)))

    def test_empty_series_has_no_average(self):
        with pytest.raises(EmptyInputError):
            surge.avg_surge_multiplier(series("r", []))


class TestSurgeMatrix:
    def test_slots_follow_local_hour_of_week(self):
        by_route = {
            "a": series("a", [1200, 1000, 1300]),           # slots 0 and 2
            "b": series("b", [1000, 1000, 1000]),
        }
        m = surge.build_surge_matrix(by_route)
        assert m.route_ids == ("a", "b")
        assert m.s.shape == (2, 168)
        assert m.s[0, 0] == 1 and m.s[0, 1] == 0 and m.s[0, 2] == 1
        assert m.s[0, 3:].sum() == 0
        assert m.s[1].sum() == 0

    def test_epsilon_boundary(self):
        # base of a million cents resolves one-in-a-million multipliers
        by_route = {
            "at": series("at", [1_000_001], base=1_000_000),
            "above": series("above", [1_000_002], base=1_000_000),
        }
        m = surge.build_surge_matrix(by_route)
        assert m.s[1, 0] == 0   # multiplier 1 + 1e-6 does not clear 1 + epsilon
        assert m.s[0, 0] == 1   # 1 + 2e-6 does

    def test_indicator_values_validated(self):
        with pytest.raises(ValueError):
            surge.SurgeMatrix(s=np.full((1, 168), 2, dtype=np.int8), route_ids=("r",))


class TestSurgeFraction:
    def test_uniform_weights_count_surging_pairs(self):
        s = np.zeros((2, 168), dtype=np.int8)
        s[0, :84] = 1
        m = surge.SurgeMatrix(s=s, route_ids=("a", "b"))
        assert surge.surge_fraction(m, np.ones(168)) == pytest.approx(84 / (2 * 168))

    def test_weights_concentrate_the_average(self):
        s = np.zeros((1, 168), dtype=np.int8)
        s[0, 10] = 1
        m = surge.SurgeMatrix(s=s, route_ids=("a",))
        w = np.zeros(168)
        w[10] = 5.0
        assert surge.surge_fraction(m, w) == 1.0
        w[20] = 5.0
        assert surge.surge_fraction(m, w) == 0.5

    def test_degenerate_weights_rejected(self):
        m = surge.SurgeMatrix(s=np.zeros((1, 168), dtype=np.int8), route_ids=("a",))
        with pytest.raises(DegenerateWeightsError):
            surge.surge_fraction(m, np.ones(24))
        with pytest.raises(DegenerateWeightsError):
            surge.surge_fraction(m, np.zeros(168))
        bad = np.ones(168)
        bad[0] = -1.0
        with pytest.raises(DegenerateWeightsError):
            surge.surge_fraction(m, bad)

    @given(arrays(np.int8, (4, 12), elements=st.integers(0, 1)),
           arrays(np.float64, 12, elements=st.floats(0.01, 10.0)))
    def test_matches_loop_oracle(self, s, w):
        m = surge.SurgeMatrix(s=s, route_ids=tuple(f"r{i}" for i in range(4)))
        assert surge.surge_fraction(m, w) == pytest.approx(surge_fraction_loops(s, w))

    def test_loop_oracle_on_bundled_week(self, weekly_series, query_log):
        from faregrid import savings

        m = surge.build_surge_matrix(weekly_series)
        weights = savings.query_frequency_stats(query_log).histogram.counts
        st_value = surge.surge_fraction(m, weights)
        assert st_value == pytest.approx(surge_fraction_loops(m.s, weights), abs=1e-12)


class TestPearson:
    def test_exact_plus_minus_one(self):
        assert surge.pearson_r([1, 2, 3], [10, 20, 30]) == 1.0
        assert surge.pearson_r([1, 2, 3], [30, 20, 10]) == -1.0

    def test_scale_and_shift_invariance(self):
        x = [1.0, 4.0, 2.0, 8.0]
        y = [0.5, 3.0, 1.0, 5.0]
        r = surge.pearson_r(x, y)
        assert surge.pearson_r([3 * v + 7 for v in x], y) == pytest.approx(r)

    def test_degenerate_inputs(self):
        with pytest.raises(UndefinedCorrelationError):
            surge.pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(UndefinedCorrelationError):
            surge.pearson_r([1.0], [2.0])
        with pytest.raises(ValueError):
            surge.pearson_r([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_survives_tiny_variance(self):
        # x - mean has magnitude ~1e-145; the sum of squared deviations still
        # squares that, so a naive sqrt(sxx * syy) underflows to zero
        a = 1.3061899564792536e-145
        r = surge.pearson_r([0.0, 0.0, a], [0.0, a, 0.0])
        assert r == pytest.approx(-0.5)

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=30),
           st.lists(st.floats(-100, 100), min_size=3, max_size=30))
    def test_matches_numpy_oracle(self, x, y):
        n = min(len(x), len(y))
        x, y = x[:n], y[:n]
        # numpy's corrcoef underflows on near-constant input, so only compare
        # where both implementations are well conditioned
        if max(x) - min(x) < 1e-6 or max(y) - min(y) < 1e-6:
            return
        assert surge.pearson_r(x, y) == pytest.approx(pearson_numpy(x, y), abs=1e-9)


class TestResample:
    def test_locf_carries_last_value(self):
        s = surge.SurgeSeries(route_id="r", base_cents=1000, samples=(
            (WEEK0, 1000), (WEEK0 + timedelta(hours=2), 1500)))
        grid = [WEEK0, WEEK0 + timedelta(hours=1), WEEK0 + timedelta(hours=2)]
        assert surge.resample_locf(s, grid).tolist() == [1.0, 1.0, 1.5]

    def test_instant_before_first_sample(self):
        s = series("r", [1000, 1100])
        with pytest.raises(AlignmentError):
            surge.resample_locf(s, [WEEK0 - timedelta(hours=1)])


class TestControlledExperiment:
    def test_identical_routes_correlate_perfectly(self):
        result = surge.controlled_experiment(
            [series("a", [1000, 1500, 2000]), series("b", [1000, 1500, 2000])],
            surge.MODE_FIXED_ORIGIN)
        assert result.mean_pairwise_r == 1.0
        assert result.r_matrix.tolist() == [[1.0, 1.0], [1.0, 1.0]]
        assert result.route_ids == ("a", "b")

    def test_opposed_routes_correlate_negatively(self):
        result = surge.controlled_experiment(
            [series("a", [1000, 2000, 3000]), series("b", [3000, 2000, 1000])],
            surge.MODE_FIXED_DESTINATION)
        assert result.mean_pairwise_r == -1.0

    def test_matrix_is_symmetric_with_unit_diagonal(self):
        result = surge.controlled_experiment(
            [series("a", [1000, 1500, 1200, 1800]),
             series("b", [1100, 1000, 1900, 1300]),
             series("c", [1000, 1000, 1100, 1600])],
            surge.MODE_FIXED_ORIGIN)
        r = result.r_matrix
        assert np.allclose(r, r.T)
        assert np.allclose(np.diag(r), 1.0)
        off = [r[i, j] for i in range(3) for j in range(i + 1, 3)]
        assert result.mean_pairwise_r == pytest.approx(np.mean(off))

    def test_needs_two_routes_and_overlap(self):
        with pytest.raises(EmptyInputError):
            surge.controlled_experiment([series("a", [1000, 1100])],
                                        surge.MODE_FIXED_ORIGIN)
        late = series("b", [1000, 1100], start=WEEK0 + timedelta(days=2))
        with pytest.raises(AlignmentError):
            surge.controlled_experiment([series("a", [1000, 1100]), late],
                                        surge.MODE_FIXED_ORIGIN)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            surge.controlled_experiment(
                [series("a", [1000, 1100]), series("b", [1000, 1100])], "sideways")


class TestAreaStats:
    def _route(self, route_id, cell):
        lat, lon = ANALYSIS_GRID.cell_center(cell)
        return surge.Route(route_id=route_id, origin=(lat, lon),
                           destination=(lat + 0.01, lon + 0.01))

    def test_per_cell_average_and_empty_cells(self):
        c0, c1 = CellIndex(20, 20), CellIndex(20, 21)
        routes = {"a": self._route("a", c0), "b": self._route("b", c0),
                  "c": self._route("c", c1)}
        by_route = {
            "a": series("a", [1000, 1200]),     # avg 1.1
            "b": series("b", [1000, 1600]),     # avg 1.3
            "c": series("c", [1000, 1000]),     # avg 1.0
        }
        region = CellRect(20, 20, 1, 3)
        stats = surge.area_surge_stats(by_route, routes, ANALYSIS_GRID, region)
        assert [s.cell for s in stats] == [c0, c1, CellIndex(20, 22)]
        assert stats[0].avg_multiplier == pytest.approx(1.2)
        assert stats[0].route_count == 2
        assert stats[1].avg_multiplier == pytest.approx(1.0)
        assert stats[2] == surge.AreaSurgeStats(CellIndex(20, 22), 1.0, 0)

    def test_unknown_route_raises(self):
        with pytest.raises(KeyError):
            surge.area_surge_stats({"ghost": series("ghost", [1000])},
                                   {}, ANALYSIS_GRID)

    def test_below_base_average_rejected(self):
        with pytest.raises(ValueError):
            surge.AreaSurgeStats(CellIndex(0, 0), 0.9, 1)

    def test_heatmap_raster_layout(self):
        region = CellRect(5, 7, 2, 2)
        stats = [surge.AreaSurgeStats(CellIndex(6, 8), 1.5, 3)]
        raster = surge.heatmap_raster(stats, region)
        assert raster.shape == (2, 2)
        assert raster[1, 1] == 1.5
        assert raster[0, 0] == raster[0, 1] == raster[1, 0] == 1.0

    def test_histogram_bins(self):
        stats = [surge.AreaSurgeStats(CellIndex(0, 0), 1.0, 1),
                 surge.AreaSurgeStats(CellIndex(0, 1), 1.05, 1),
                 surge.AreaSurgeStats(CellIndex(0, 2), 1.25, 1)]
        edges, counts = surge.multiplier_histogram(stats)
        assert edges[0] == pytest.approx(1.0)
        assert counts[:3].tolist() == [2, 0, 1]
        assert counts.sum() == 3


class TestReplayLog:
    def _entry(self, hours, lo, hi):
        return surge.ReplayEntry(timestamp=WEEK0 + timedelta(hours=hours),
                                 min_cents=lo, max_cents=hi)

    def test_mid_cents_is_rounded_midpoint(self):
        assert self._entry(0, 600, 700).mid_cents == 650

    def test_base_change_mid_log_rejected(self):
        log = surge.ReplayLog()
        log.add("r", self._entry(0, 950, 1050), base_cents=1000)
        with pytest.raises(ValueError):
            log.add("r", self._entry(1, 950, 1050), base_cents=1100)

    def test_series_sorts_by_time(self):
        log = surge.ReplayLog()
        log.add("r", self._entry(1, 1100, 1100), base_cents=1000)
        log.add("r", self._entry(0, 1000, 1000), base_cents=1000)
        s = log.series()["r"]
        assert s.prices_cents.tolist() == [1000.0, 1100.0]
        assert s.base_cents == 1000

    def test_write_read_round_trip_is_byte_stable(self, tmp_path):
        log = surge.ReplayLog()
        log.add("r1", self._entry(0, 950, 1050), base_cents=1000)
        log.add("r1", self._entry(1, 1400, 1500), base_cents=1000)
        log.add("r0", self._entry(0, 500, 600), base_cents=550)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        log.write(p1)
        surge.ReplayLog.read(p1).write(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_mismatch_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("route,when,lo,hi,base\n")
        with pytest.raises(ValueError):
            surge.ReplayLog.read(p)


class TestReplayProvider:
    def _provider(self):
        log = surge.ReplayLog()
        log.add("r0", surge.ReplayEntry(WEEK0, 1140, 1260), base_cents=1000)
        routes = {"r0": surge.Route("r0", (40.62, -74.02), (40.64, -74.00))}
        return surge.ReplayProvider(log, routes)

    def test_quote_by_endpoints(self):
        quote = self._provider().quote((40.62, -74.02), (40.64, -74.00), WEEK0)
        assert quote.provider == "uber"
        assert quote.min_cents == 1140 and quote.max_cents == 1260
        assert quote.mean_cents == 1200
        assert quote.multiplier == pytest.approx(1.2)
        assert quote.source == surge.SOURCE_REPLAY

    def test_needs_explicit_time(self):
        with pytest.raises(QuoteUnavailableError):
            self._provider().quote((40.62, -74.02), (40.64, -74.00))

    def test_unknown_endpoints_and_missing_slot(self):
        p = self._provider()
        with pytest.raises(QuoteUnavailableError):
            p.quote((40.0, -74.0), (40.6, -74.0), WEEK0)
        with pytest.raises(QuoteUnavailableError):
            p.quote_route("r0", WEEK0 + timedelta(hours=3))


class TestSyntheticProvider:
    def _provider(self, **kwargs):
        return surge.SyntheticProvider(
            spec=ANALYSIS_GRID, base_of=lambda o, d: 1000, **kwargs)

    def test_quotes_are_deterministic(self):
        a = self._provider(seed=5).quote((40.62, -74.02), (40.64, -74.00), WEEK0)
        b = self._provider(seed=5).quote((40.62, -74.02), (40.64, -74.00), WEEK0)
        assert a == b

    def test_pinned_multiplier_shapes_the_range(self):
        p = self._provider(pinned_multiplier=1.5)
        quote = p.quote((40.62, -74.02), (40.64, -74.00), WEEK0)
        assert quote.multiplier == 1.5
        assert quote.mean_cents == 1500
        assert quote.min_cents == 1425 and quote.max_cents == 1575

    def test_pin_is_capped(self):
        p = self._provider(pinned_multiplier=99.0)
        assert p.multiplier_at((40.62, -74.02), (40.64, -74.00), WEEK0) == 3.0

    def test_zero_demand_never_surges(self):
        p = self._provider(seed=1, demand_of=lambda cell: 0.0)
        for k in range(50):
            when = WEEK0 + timedelta(hours=k)
            assert p.multiplier_at((40.62, -74.02), (40.64, -74.00), when) == 1.0

    def test_higher_demand_raises_average_multiplier(self):
        lo = self._provider(seed=1, demand_of=lambda cell: 1.0)
        hi = self._provider(seed=1, demand_of=lambda cell: 5.0)
        times = [WEEK0 + timedelta(hours=k) for k in range(500)]
        route = ((40.62, -74.02), (40.64, -74.00))
        mean_lo = np.mean([lo.multiplier_at(*route, t) for t in times])
        mean_hi = np.mean([hi.multiplier_at(*route, t) for t in times])
        assert mean_hi > mean_lo

    def test_hash_u01_in_unit_interval(self):
        values = [surge.hash_u01(seed, route, slot)
                  for seed in range(3) for route in range(3) for slot in range(10)]
        assert all(0.0 <= v < 1.0 for v in values)
        assert len(set(values)) == len(values)

    def test_quantile_walks_the_stationary_cdf(self):
        config = surge.SurgeModelConfig()
        assert config.quantile(0.0) == 1.0
        assert config.quantile(0.71) == 1.0
        assert config.quantile(0.73) == 1.1
        assert config.quantile(0.9999) == 2.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            surge.SurgeModelConfig(stationary=((1.0, 0.5), (1.1, 0.4)))
        with pytest.raises(ValueError):
            surge.SurgeModelConfig(stationary=((1.0, 0.5), (9.0, 0.5)))


class TestBundledWeek:
    def test_matrix_shape_and_region_coverage(self, weekly_series, weekly_routes):
        m = surge.build_surge_matrix(weekly_series)
        assert m.s.shape == (800, 168)
        region = CellRect(20, 20, 28, 30)
        stats = surge.area_surge_stats(weekly_series, weekly_routes,
                                       ANALYSIS_GRID, region)
        assert len(stats) == 840
        above = sum(1 for s in stats if s.avg_multiplier > 1.0 + surge.SURGE_EPSILON)
        assert above == 588
        assert max(s.avg_multiplier for s in stats) <= 3.0

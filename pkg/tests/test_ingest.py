import json
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from faregrid import ingest
from faregrid.errors import HeaderError

TRIP_HEADER = ("medallion,hack_license,vendor_id,rate_code,store_and_fwd_flag,"
               "pickup_datetime,dropoff_datetime,passenger_count,trip_time_in_secs,"
               "trip_distance,pickup_longitude,pickup_latitude,"
               "dropoff_longitude,dropoff_latitude")
FARE_HEADER = ("medallion,hack_license,vendor_id,pickup_datetime,payment_type,"
               "fare_amount,surcharge,mta_tax,tip_amount,tolls_amount,total_amount")


def trip_line(med="m1", hack="h1", pickup="2013-09-02 08:00:00",
              dropoff="2013-09-02 08:10:00", dist="2.00",
              plon="-74.000000", plat="40.700000",
              dlon="-73.990000", dlat="40.710000") -> str:
    return f"{med},{hack},VTS,1,N,{pickup},{dropoff},1,600,{dist},{plon},{plat},{dlon},{dlat}"


def fare_line(med="m1", hack="h1", pickup="2013-09-02 08:00:00", payment="CRD",
              fare="10.00", tip="2.00", total="13.00") -> str:
    return f"{med},{hack},VTS,{pickup},{payment},{fare},0.50,0.50,{tip},0.00,{total}"


def write_files(tmp_path, trip_lines, fare_lines):
    trips = tmp_path / "trips.csv"
    fares = tmp_path / "fares.csv"
    trips.write_text(TRIP_HEADER + "\n" + "".join(l + "\n" for l in trip_lines))
    fares.write_text(FARE_HEADER + "\n" + "".join(l + "\n" for l in fare_lines))
    return trips, fares


@pytest.fixture
def config():
    return ingest.IngestConfig.nyc_tlc_2013()


class TestParsing:
    def test_clean_pair_accepted(self, tmp_path, config):
        trips, fares = write_files(tmp_path, [trip_line()], [fare_line()])
        result = ingest.ingest_files(trips, fares, config)
        assert result.report.rows_read == 2
        assert result.report.rows_accepted == 2
        assert result.report.rows_rejected == 0
        [rec] = result.records
        assert rec.fare_cents == 1000
        assert rec.tip_cents == 200
        assert rec.total_cents == 1300
        assert rec.payment_type == ingest.PAYMENT_CARD
        assert rec.trip_distance_km == pytest.approx(2 * 1.609344)
        assert rec.pickup_time == datetime(2013, 9, 2, 8, 0, tzinfo=timezone.utc)
        assert rec.duration_min == pytest.approx(10.0)

    def test_source_timezone_is_applied(self, tmp_path):
        config = ingest.IngestConfig.nyc_tlc_2013(source_tz="America/New_York")
        trips, fares = write_files(tmp_path, [trip_line()], [fare_line()])
        result = ingest.ingest_files(trips, fares, config)
        # 08:00 EDT == 12:00 UTC
        assert result.records[0].pickup_time == datetime(2013, 9, 2, 12, 0, tzinfo=timezone.utc)

    def test_missing_header_column_raises(self, tmp_path, config):
        trips = tmp_path / "trips.csv"
        trips.write_text("medallion,hack_license\nm1,h1\n")
        fares = tmp_path / "fares.csv"
        fares.write_text(FARE_HEADER + "\n")
        with pytest.raises(HeaderError):
            ingest.ingest_files(trips, fares, config)

    def test_empty_file_raises(self, tmp_path, config):
        trips = tmp_path / "trips.csv"
        trips.write_text("")
        fares = tmp_path / "fares.csv"
        fares.write_text(FARE_HEADER + "\n")
        with pytest.raises(HeaderError):
            ingest.ingest_files(trips, fares, config)

    def test_unknown_payment_code_maps_to_other(self, tmp_path, config):
        trips, fares = write_files(tmp_path, [trip_line()], [fare_line(payment="UNK")])
        result = ingest.ingest_files(trips, fares, config)
        assert result.records[0].payment_type == ingest.PAYMENT_OTHER

    def test_config_from_json_round_trip(self, tmp_path, config):
        path = tmp_path / "map.json"
        path.write_text(json.dumps({
            "trip_columns": config.trip_columns,
            "fare_columns": config.fare_columns,
            "join_key": list(config.join_key),
            "distance_unit": "km",
            "source_tz": "America/New_York",
        }))
        loaded = ingest.IngestConfig.from_json(path)
        assert loaded.join_key == config.join_key
        assert loaded.distance_unit == "km"
        assert loaded.source_tz == "America/New_York"


class TestRejectReasons:
    CASES = [
        (ingest.BAD_COORDINATE, trip_line(plat="40.7x"), fare_line()),
        (ingest.BAD_TIMESTAMP, trip_line(dropoff="2013-99-99 08:10:00"), fare_line()),
        (ingest.BAD_DISTANCE, trip_line(dist="2..0"), fare_line()),
        (ingest.BAD_MONEY, trip_line(), fare_line(total="13.x")),
        (ingest.MISSING_FIELD, trip_line(dlat=""), fare_line()),
        (ingest.NEGATIVE_DISTANCE, trip_line(dist="-2.0"), fare_line()),
        (ingest.TIME_ORDER, trip_line(pickup="2013-09-02 08:20:00"),
         fare_line(pickup="2013-09-02 08:20:00")),
        (ingest.OUT_OF_BOX, trip_line(plat="39.000000"), fare_line()),
        (ingest.BAD_AMOUNTS, trip_line(), fare_line(total="3.00")),
    ]

    @pytest.mark.parametrize("reason,trip,fare", CASES, ids=[c[0] for c in CASES])
    def test_reason_counted_and_conserved(self, tmp_path, config, reason, trip, fare):
        trips, fares = write_files(tmp_path, [trip], [fare])
        result = ingest.ingest_files(trips, fares, config, reject_dir=tmp_path / "rej")
        assert result.records == []
        assert result.report.rejection_reasons[reason] >= 1
        assert result.report.check_conservation()
        logged = (tmp_path / "rej" / "trips.csv.rejects.tsv").read_text() + \
                 (tmp_path / "rej" / "fares.csv.rejects.tsv").read_text()
        assert reason in logged

    def test_unmatched_both_sides(self, tmp_path, config):
        trips, fares = write_files(
            tmp_path,
            [trip_line(med="only_trip"), trip_line(med="both")],
            [fare_line(med="only_fare"), fare_line(med="both")])
        result = ingest.ingest_files(trips, fares, config)
        assert len(result.records) == 1
        assert result.report.rejection_reasons[ingest.UNMATCHED_TRIP] == 1
        assert result.report.rejection_reasons[ingest.UNMATCHED_FARE] == 1
        assert result.report.check_conservation()

    def test_duplicate_key_rejects_all_involved_rows(self, tmp_path, config):
        trips, fares = write_files(
            tmp_path,
            [trip_line(med="dup"), trip_line(med="dup"), trip_line(med="ok")],
            [fare_line(med="dup"), fare_line(med="ok")])
        result = ingest.ingest_files(trips, fares, config)
        assert [r.trip_id.split(":")[0] for r in result.records] == ["ok"]
        assert result.report.rejection_reasons[ingest.AMBIGUOUS_JOIN] == 3
        assert result.report.check_conservation()

    def test_validation_rejects_count_both_rows(self, tmp_path, config):
        trips, fares = write_files(tmp_path, [trip_line(dist="-1.0")], [fare_line()])
        result = ingest.ingest_files(trips, fares, config)
        assert result.report.rejection_reasons[ingest.NEGATIVE_DISTANCE] == 2
        assert result.report.rows_read == 2
        assert result.report.check_conservation()


class TestValidateRecord:
    def _rec(self, **kwargs):
        base = dict(
            trip_id="t",
            pickup_time=datetime(2013, 9, 2, 8, 0, tzinfo=timezone.utc),
            dropoff_time=datetime(2013, 9, 2, 8, 10, tzinfo=timezone.utc),
            pickup_lat=40.7, pickup_lon=-74.0, dropoff_lat=40.71, dropoff_lon=-73.99,
            trip_distance_km=2.0, fare_cents=1000, tip_cents=0, total_cents=1000,
            payment_type="cash")
        base.update(kwargs)
        return ingest.TripRecord(**base)

    def test_accepts_clean(self):
        assert ingest.validate_record(self._rec(), ingest.NYC_BOX) is None

    def test_zero_duration_is_legal(self):
        rec = self._rec(dropoff_time=datetime(2013, 9, 2, 8, 0, tzinfo=timezone.utc))
        assert ingest.validate_record(rec, ingest.NYC_BOX) is None

    def test_total_below_fare_rejected(self):
        rec = self._rec(total_cents=900)
        assert ingest.validate_record(rec, ingest.NYC_BOX) == ingest.BAD_AMOUNTS

    def test_negative_tip_rejected(self):
        rec = self._rec(tip_cents=-1)
        assert ingest.validate_record(rec, ingest.NYC_BOX) == ingest.BAD_AMOUNTS


class TestConservationProperty:
    @given(st.lists(st.sampled_from(["clean", "bad_coord", "bad_money", "missing",
                                     "neg_dist", "out_box", "orphan_trip",
                                     "orphan_fare", "dup"]),
                    min_size=0, max_size=25))
    def test_random_mixtures_conserve_rows(self, kinds):
        trips, fares = [], []
        for i, kind in enumerate(kinds):
            med = f"m{i}"
            if kind == "clean":
                trips.append(trip_line(med=med))
                fares.append(fare_line(med=med))
            elif kind == "bad_coord":
                trips.append(trip_line(med=med, plat="oops"))
                fares.append(fare_line(med=med))
            elif kind == "bad_money":
                trips.append(trip_line(med=med))
                fares.append(fare_line(med=med, fare="x"))
            elif kind == "missing":
                trips.append(trip_line(med=med, dist=""))
                fares.append(fare_line(med=med))
            elif kind == "neg_dist":
                trips.append(trip_line(med=med, dist="-3.0"))
                fares.append(fare_line(med=med))
            elif kind == "out_box":
                trips.append(trip_line(med=med, dlat="10.000000"))
                fares.append(fare_line(med=med))
            elif kind == "orphan_trip":
                trips.append(trip_line(med=med))
            elif kind == "orphan_fare":
                fares.append(fare_line(med=med))
            elif kind == "dup":
                trips.append(trip_line(med=med))
                trips.append(trip_line(med=med))
                fares.append(fare_line(med=med))
        with tempfile.TemporaryDirectory() as tmp:
            t, f = write_files(Path(tmp), trips, fares)
            result = ingest.ingest_files(t, f, ingest.IngestConfig.nyc_tlc_2013())
        report = result.report
        assert report.rows_read == len(trips) + len(fares)
        assert report.check_conservation()
        assert report.rows_accepted == 2 * len(result.records)
        expected_clean = sum(1 for k in kinds if k == "clean")
        assert len(result.records) == expected_clean


class TestBundledCorpus:
    def test_report_matches_manifest(self, data_dir, sample_ingest):
        manifest = json.loads((data_dir / "MANIFEST.json").read_text())["ingest"]
        report = sample_ingest.report
        assert report.rows_read == manifest["trips_rows"] + manifest["fares_rows"]
        assert len(sample_ingest.records) == manifest["clean_records"]
        assert dict(report.rejection_reasons) == manifest["expected_rejects"]
        assert report.check_conservation()

    def test_row_counts_match_raw_files(self, golden_dir, sample_ingest, data_dir):
        golden = json.loads((golden_dir / "sample_manifest.json").read_text())
        assert sample_ingest.report.rows_read == (golden["trips_rows"]
                                                  + golden["fares_rows"])

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

# oracles.py / service_fixture.py live next to the tests
sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile("ci", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "goldens"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def warm_tree():
    """Compile the tree kernels outside any timed assertion."""
    from faregrid import predict

    predict.warm_up()


@pytest.fixture(scope="session")
def sample_ingest(data_dir):
    from faregrid import ingest

    config = ingest.IngestConfig.from_json(data_dir / "column_map.json")
    return ingest.ingest_files(data_dir / "trips.csv", data_dir / "fares.csv", config)


@pytest.fixture(scope="session")
def sample_od_app(sample_ingest):
    from faregrid.grid import APP_GRID, aggregate_od_stats

    return aggregate_od_stats(sample_ingest.records, APP_GRID)


@pytest.fixture(scope="session")
def weekly_series(data_dir):
    from faregrid import surge

    return surge.ReplayLog.read(data_dir / "replay_weekly.csv").series()


@pytest.fixture(scope="session")
def weekly_routes(data_dir):
    from faregrid import surge

    return surge.load_routes(data_dir / "routes_weekly.csv")


@pytest.fixture(scope="session")
def feature_rows(data_dir):
    from faregrid import predict

    return predict.read_feature_rows(data_dir / "area_features.csv")


@pytest.fixture(scope="session")
def query_log(data_dir):
    from faregrid import savings

    return savings.read_query_log(data_dir / "queries.jsonl")


@pytest.fixture(scope="session")
def rebuilt_corpus(tmp_path_factory):
    """One full `fixtures` rebuild shared by the CLI smoke test and the
    byte-identity check; building twice would double the slowest fixture."""
    import contextlib
    import io

    from faregrid import cli

    out_dir = tmp_path_factory.mktemp("rebuild") / "corpus"
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(["fixtures", "--out", str(out_dir)])
    return code, out_dir, buf.getvalue()

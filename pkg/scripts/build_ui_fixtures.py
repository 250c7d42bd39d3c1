#!/usr/bin/env python3
"""Capture /v1 responses as fixtures for the web client's tests.

The uber-winner body reuses the frozen service golden so both sides pin
the same bytes; the yellow-winner, error and heatmap bodies are captured
from a live service over the bundled corpus.  The tie body is edited by
hand from the golden because the engine only ties on exactly equal
quotes, which the corpus does not contain.

Run from the repository root:

    python3 scripts/build_ui_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
FIXTURES = ROOT / "frontend" / "tests" / "fixtures"


def _write(name: str, payload: dict) -> None:
    (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(name)


def main() -> int:
    from fastapi.testclient import TestClient

    sys.path.insert(0, str(ROOT / "tests"))
    from service_fixture import GOLDEN_REQUEST, build_engine, make_state

    from faregrid.service import create_app

    FIXTURES.mkdir(parents=True, exist_ok=True)
    scratch = FIXTURES / ".scratch_log.jsonl"

    golden = json.loads((ROOT / "tests" / "goldens" / "service_golden.json").read_text())
    uber_body = json.loads(golden["body"])
    _write("estimate_uber.json", uber_body)

    tie = dict(uber_body)
    tie["uber"] = dict(tie["yellow"], source="synthetic")
    tie["winner"] = "tie"
    tie["delta"] = "0.00"
    tie["savings"] = "0.00"
    _write("estimate_tie.json", tie)

    # a pinned 2.5x multiplier prices the competitor out, flipping the winner
    engine = build_engine(DATA, pinned_multiplier=2.5)
    state = make_state(DATA, scratch, engine=engine)
    with TestClient(create_app(state)) as client:
        yellow = client.post("/v1/estimate", json=GOLDEN_REQUEST)
        assert yellow.status_code == 200 and yellow.json()["winner"] == "yellow"
        _write("estimate_yellow.json", yellow.json())

        oob = client.post("/v1/estimate", json={
            "origin": {"lat": 40.95, "lon": -74.02},
            "destination": {"lat": 40.634624, "lon": -74.000845},
            "user_id": "fixture",
        })
        assert oob.status_code == 422
        _write("error_out_of_grid.json", oob.json())

        unknown = client.post("/v1/estimate", json={
            "origin": {"name": "atlantis"},
            "destination": {"name": "mill_square"},
            "user_id": "fixture",
        })
        assert unknown.status_code == 422
        _write("error_unknown_place.json", unknown.json())

        heat = client.get("/v1/surge/heatmap")
        assert heat.status_code == 200 and heat.json()["count"] == 840
        _write("heatmap_840.json", heat.json())

    scratch.unlink(missing_ok=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

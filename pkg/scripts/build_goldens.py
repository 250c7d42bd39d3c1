#!/usr/bin/env python3
"""Regenerate the frozen expectations under tests/goldens/.

The statistical goldens (experiment correlations, ranking baseline, file
manifest) are computed here from the raw corpus files with plain csv/numpy
code, independently of the library, so tests compare two implementations.
The tree dump and service response goldens freeze library output to pin
determinism across runs and platforms.

Run from the repository root after rebuilding data/:

    python3 scripts/build_goldens.py
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
GOLDENS = ROOT / "tests" / "goldens"


def file_manifest() -> dict:
    """Raw line counts and digests, straight off the files."""
    files = {}
    for path in sorted(DATA.iterdir()):
        if path.name.startswith("."):
            continue
        blob = path.read_bytes()
        files[path.name] = {
            "bytes": len(blob),
            "lines": blob.count(b"\n"),
            "sha256": hashlib.sha256(blob).hexdigest(),
        }
    # data rows exclude the single header line
    return {
        "files": files,
        "trips_rows": files["trips.csv"]["lines"] - 1,
        "fares_rows": files["fares.csv"]["lines"] - 1,
        "query_rows": files["queries.jsonl"]["lines"],
    }


def _replay_multipliers(path: Path) -> dict[str, list[float]]:
    """route -> multiplier series, computed from scratch: midpoint of the
    quoted range over the constant base price, in timestamp order."""
    rows = defaultdict(list)
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            mid = (float(row["min"]) + float(row["max"])) / 2.0
            rows[row["route_id"]].append((row["timestamp"], mid, float(row["base_price"])))
    out = {}
    for route, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        out[route] = [mid / base for _, mid, base in entries]
    return out


def experiment_golden() -> dict:
    result = {}
    for mode, name in (("fixed_origin", "replay_fixed_origin.csv"),
                       ("fixed_destination", "replay_fixed_destination.csv")):
        series = _replay_multipliers(DATA / name)
        ids = sorted(series)
        pair_rs = []
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                r = np.corrcoef(series[ids[i]], series[ids[j]])[0, 1]
                pair_rs.append(float(r))
        result[mode] = {
            "n_routes": len(ids),
            "mean_pairwise_r": float(np.mean(pair_rs)),
        }
    return result


def ndcg_baseline(k: int = 100, trials: int = 1000, seed: int = 0) -> dict:
    """Monte-Carlo mean NDCG of random area rankings, written out longhand."""
    gains = {}
    with (DATA / "area_features.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            cell = (int(row["row"]), int(row["col"]))
            gains[cell] = max(0.0, float(row["target"]) - 1.0)

    ids = sorted(gains)
    ideal = 0.0
    for pos, g in enumerate(sorted(gains.values(), reverse=True)[:k], start=1):
        ideal += g / math.log2(pos + 1)

    rng = np.random.default_rng(seed)
    scores = []
    for _ in range(trials):
        order = rng.permutation(len(ids))
        dcg = 0.0
        for pos, idx in enumerate(order[:k], start=1):
            dcg += gains[ids[idx]] / math.log2(pos + 1)
        scores.append(dcg / ideal)
    return {"k": k, "trials": trials, "seed": seed,
            "baseline": float(np.mean(scores)), "n_areas": len(ids)}


def tree_golden() -> str:
    """Frozen dump of the tree fit on the bundled training instance."""
    from faregrid import predict

    rows = predict.read_feature_rows(DATA / "area_features.csv")
    predict.warm_up()
    return predict.fit_tree_rows(rows).dump()


def service_golden() -> dict:
    """Frozen request/response pair for the estimate endpoint."""
    from fastapi.testclient import TestClient

    sys.path.insert(0, str(ROOT / "tests"))
    from service_fixture import GOLDEN_REQUEST, make_state

    from faregrid.service import create_app

    state = make_state(DATA, ROOT / "tests" / "goldens" / ".scratch_log.jsonl")
    app = create_app(state)
    with TestClient(app) as client:
        response = client.post("/v1/estimate", json=GOLDEN_REQUEST)
    (GOLDENS / ".scratch_log.jsonl").unlink(missing_ok=True)
    return {
        "request": GOLDEN_REQUEST,
        "status": response.status_code,
        "body": response.content.decode("utf-8"),
    }


def main() -> int:
    GOLDENS.mkdir(parents=True, exist_ok=True)

    (GOLDENS / "sample_manifest.json").write_text(
        json.dumps(file_manifest(), indent=2, sort_keys=True) + "\n")
    print("sample_manifest.json")

    (GOLDENS / "experiment_golden.json").write_text(
        json.dumps(experiment_golden(), indent=2, sort_keys=True) + "\n")
    print("experiment_golden.json")

    (GOLDENS / "ndcg_baseline.json").write_text(
        json.dumps(ndcg_baseline(), indent=2, sort_keys=True) + "\n")
    print("ndcg_baseline.json")

    (GOLDENS / "golden_tree.txt").write_text(tree_golden())
    print("golden_tree.txt")

    (GOLDENS / "service_golden.json").write_text(
        json.dumps(service_golden(), indent=2, sort_keys=True) + "\n")
    print("service_golden.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())

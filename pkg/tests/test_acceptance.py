"""End-to-end acceptance checks.

Each test records one ``PASS``/``FAIL`` line with its measurement; the lines
are printed in the pytest terminal summary. Run with
``pytest tests/test_acceptance.py`` or standalone with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cobfc import report, synthetic  # noqa: E402
from cobfc.data import EUCLIDEAN, MANHATTAN, encode, read_dataset  # noqa: E402
from cobfc.dcfringe import dc_fringe  # noqa: E402
from cobfc.harness import (EvalReport, MethodSummary, PipelineConfig,  # noqa: E402
                           construct_features, evaluate, flags, verify_features)
from cobfc.lof import LofParams, detect_class_outliers, lof_scores  # noqa: E402
from cobfc.neighborhood import overlap  # noqa: E402
from oracles import brute_cover, brute_distance, brute_lof  # noqa: E402
from strategies import random_dataset  # noqa: E402

pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"
REAL = ["iris.csv", "wine.csv", "breast_cancer.csv", "monk1.arff", "monk2.arff", "monk3.arff"]


VERDICTS: list[str] = []


def verdict(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    VERDICTS.append(line)
    print(line)
    return ok


def test_lof_matches_oracle():
    rng = np.random.default_rng(2024)
    worst, lib_time, t0 = 0.0, 0.0, time.perf_counter()
    metrics = set()
    for i in range(200):
        n = int(rng.integers(12, 51))
        min_pts = int(rng.integers(1, 11))
        if i % 2 == 0:
            metric = EUCLIDEAN
            ds = random_dataset(rng, n, int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        else:
            metric = MANHATTAN
            ds = random_dataset(rng, n, int(rng.integers(0, 3)), int(rng.integers(1, 3)))
        metrics.add(metric)
        a = time.perf_counter()
        got = lof_scores(encode(ds, metric), range(n), LofParams(min_pts=min_pts))
        lib_time += time.perf_counter() - a
        d = [[brute_distance(ds, p, q, metric) for q in range(n)] for p in range(n)]
        want = brute_lof(lambda p, q: d[p][q], range(n), min_pts)
        for p in range(n):
            worst = max(worst, abs(got[p] - want[p]) / max(1.0, abs(want[p])))
    total = time.perf_counter() - t0
    ok = worst <= 1e-9 and total < 10 and len(metrics) == 2
    assert verdict("LOF oracle equivalence", ok,
                   f"200 datasets, max rel err {worst:.1e}, library {lib_time:.2f}s, total {total:.2f}s")


def test_planted_blobs_end_to_end():
    t0 = time.perf_counter()
    ds = synthetic.planted_blobs(seed=0, n=100, planted=3)
    built = construct_features(ds, PipelineConfig(k=10, min_pts=10, lof_threshold=1.5))
    planted = list(range(len(ds) - 3, len(ds)))
    missing = [p for p in planted if p not in built.outliers.outliers]
    per_point = {}
    for p in planted:
        label = ds.instances[p].label
        hood = next((n for n in built.neighborhoods if p in n.sources), None)
        others = set() if hood is None else {r for r in hood.members if ds.instances[r].label != label}
        merged = next((n for n in built.merged if p in n.sources), None)
        good = 0
        for f in built.features:
            c = brute_cover(f, ds)
            consistent = merged is not None and len({ds.instances[r].label for r in c & set(merged.rows)}) <= 1
            if p in c and not c & others and consistent:
                good += 1
        per_point[p] = good
    elapsed = time.perf_counter() - t0
    ok = not missing and all(v >= 1 for v in per_point.values()) and elapsed < 5
    assert verdict("Planted cross-class outliers", ok,
                   f"planted in O: {3 - len(missing)}/3, isolating features per point {per_point}, "
                   f"{elapsed:.2f}s")


def test_xor_naive_bayes_gain():
    t0 = time.perf_counter()
    ds = synthetic.xor_blobs(seed=0, n=400)
    rep = evaluate(ds, PipelineConfig(learner="nb", folds=10, seed=42), ["cobfc"])
    base, cob = rep.method("none").test_mean, rep.method("cobfc").test_mean
    elapsed = time.perf_counter() - t0
    ok = cob - base >= 5 and elapsed < 30
    assert verdict("XOR weak-learner benefit", ok,
                   f"NB test {base:.2f} -> {cob:.2f} ({cob - base:+.2f} points), {elapsed:.2f}s")


def test_feature_volume_trend():
    sets = dict(synthetic.suite(seed=0))
    for name in REAL:
        sets[name.split(".")[0]] = read_dataset(DATA / name)
    rows, wins = [], 0
    for name, ds in sets.items():
        ours = len(construct_features(ds).features)
        theirs = len(dc_fringe(ds).features)
        wins += theirs > ours
        rows.append(f"{name} {ours}/{theirs}")
    ok = wins * 3 >= 2 * len(sets)
    assert verdict("Feature-volume trend", ok,
                   f"DC-Fringe > CobFC on {wins}/{len(sets)} (need >= 2/3); "
                   f"CobFC/DC-Fringe: {', '.join(rows)}")


def test_pipeline_soundness():
    t0 = time.perf_counter()
    sets = dict(synthetic.suite(seed=0))
    sets["iris"] = read_dataset(DATA / "iris.csv")
    sets["wine"] = read_dataset(DATA / "wine.csv")
    checked, runs = 0, 0
    for name, ds in sets.items():
        for pct in (0, 2):
            cfg = PipelineConfig(min_support_pct=pct)
            built = construct_features(ds, cfg)
            verify_features(built, ds)
            merged = built.merged
            assert all(overlap(a, b) < 0.5 for i, a in enumerate(merged) for b in merged[i + 1:])
            checked += len(built.features)
            # every fold re-verifies its features and asserts no test row reached the pipeline
            evaluate(ds, cfg, ["cobfc", "baseline", "dcfringe"])
            runs += 1
    elapsed = time.perf_counter() - t0
    assert verdict("Pipeline soundness", True,
                   f"{checked} features re-verified, {runs} CV runs with per-fold leakage checks, "
                   f"{elapsed:.2f}s")


def test_support_sweep_monotone():
    t0 = time.perf_counter()
    detail, ok = [], True
    for name, ds in synthetic.suite(seed=0).items():
        counts, fold_counts = [], []
        for pct in range(0, 6):
            cfg = PipelineConfig(min_support_pct=pct)
            counts.append(len(construct_features(ds, cfg).features))
            rep = evaluate(ds, cfg, ["cobfc"])
            fold_counts.append([f.features for f in rep.method("cobfc").folds])
        ok &= all(a >= b for a, b in zip(counts, counts[1:]))
        ok &= all(x >= y for a, b in zip(fold_counts, fold_counts[1:]) for x, y in zip(a, b))
        detail.append(f"{name} {counts}")
    elapsed = time.perf_counter() - t0
    assert verdict("Support sweep 0..5%", ok, f"{'; '.join(detail)}, {elapsed:.2f}s")


def test_determinism():
    ds = synthetic.planted_blobs(seed=4)
    methods = ["cobfc", "dcfringe", "baseline"]
    a = report.to_json([evaluate(ds, PipelineConfig(seed=11), methods)])
    b = report.to_json([evaluate(ds, PipelineConfig(seed=11), methods)])
    c = report.to_json([evaluate(ds, PipelineConfig(seed=11, jobs=2), methods)])
    ok = a == b == c
    assert verdict("Determinism", ok, f"{len(a)} bytes, serial x2 and parallel identical: {ok}")


def test_overfit_flags_fixture():
    ref = MethodSummary("none", 90.0, 1.0, 80.0, 1.0)
    fixture = [
        ("improved", MethodSummary("cobfc", 89.0, 1.0, 81.0, 1.0), (True, False), "**81.00 ± 1.00**"),
        ("overfit", MethodSummary("cobfc", 95.0, 1.0, 80.0, 1.0), (False, True), "<u>80.00 ± 1.00</u>"),
        ("plain", MethodSummary("cobfc", 88.0, 1.0, 79.0, 1.0), (False, False), "79.00 ± 1.00"),
    ]
    ok = True
    runs = []
    for name, summary, want, cell in fixture:
        summary.improved, summary.overfit = flags(ref, summary)
        ok &= (summary.improved, summary.overfit) == want
        runs.append(EvalReport(name, 10, 10, "nb", 42, [ref, summary]))
    md = report.to_markdown(runs).decode().splitlines()
    for (name, _, _, cell), line in zip(fixture, md[2:5]):
        ok &= line.startswith(f"| {name} |") and line.endswith(f"| {cell} |")
    assert verdict("Overfit-flag logic", ok, "3 rows: improved, overfit, neither")


if __name__ == "__main__":
    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)

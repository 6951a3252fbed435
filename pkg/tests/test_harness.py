import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobfc import report, synthetic
from cobfc.data import parse_dataset, read_dataset
from cobfc.harness import (EvalReport, FoldResult, MethodSummary, PipelineConfig, _check_no_leakage,
                           augment, construct_features, cross_validate, effective_folds, evaluate,
                           flags, remove_outliers_baseline, stratified_folds, verify_features)
from cobfc.lof import detect_class_outliers
from cobfc.ruleminer import ConjunctiveFeature
from cobfc.tree import LE, AttributeTest
from oracles import brute_cover
from strategies import random_dataset


def csv(text):
    return parse_dataset(text, "csv")


def test_planted_blobs_construction_is_sound():
    ds = synthetic.planted_blobs(seed=1)
    built = construct_features(ds)
    assert built.features
    planted = set(range(len(ds) - 3, len(ds)))
    assert planted <= set(built.outliers.outliers)
    verify_features(built, ds)


def test_separated_blobs_yield_no_features():
    ds = synthetic.two_blobs(seed=0)
    built = construct_features(ds)
    # outliers exist at the blob edges, but every neighborhood is single-class
    assert built.gated == [] and built.features == []
    assert augment(ds, built.features) == ds


def test_full_support_threshold_empties_f():
    ds = synthetic.planted_blobs(seed=0)
    built = construct_features(ds, PipelineConfig(min_support_pct=100))
    assert built.theta == len(ds)
    assert built.features == []


def test_construct_needs_two_classes():
    with pytest.raises(ValueError):
        construct_features(csv("x,class\n1,p\n2,p\n"))


def test_augment_examples():
    ds = csv("x,class\n1,p\n3,q\n")
    f = ConjunctiveFeature.from_tests([AttributeTest(0, LE, 2.0)])
    out = augment(ds, [f])
    assert [inst.values[-1] for inst in out.instances] == ["1", "0"]
    assert out.attributes[-1].values == ("0", "1")
    assert augment(ds, []) == ds
    assert augment(out, []) == out
    # applying to another dataset with the same schema gives the same column name
    other = augment(csv("x,class\n0,q\n"), [f])
    assert other.attributes[-1].name == out.attributes[-1].name


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_augment_column_equals_brute_cover(seed):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, 25, 2, 1)
    fs = [ConjunctiveFeature.from_tests([AttributeTest(0, LE, float(rng.normal()))]),
          ConjunctiveFeature.from_tests([AttributeTest(1, LE, float(rng.normal())),
                                         AttributeTest(0, LE, 1.0)])]
    out = augment(ds, fs)
    for j, f in enumerate(fs):
        col = [inst.values[3 + j] for inst in out.instances]
        hit = brute_cover(f, ds)
        assert col == ["1" if r in hit else "0" for r in range(len(ds))]


def test_baseline_removes_exactly_the_outliers():
    ds = synthetic.planted_blobs(seed=0)
    out, rep = remove_outliers_baseline(ds)
    assert len(out) == len(ds) - len(rep.outliers)
    removed = set(ds.ids.tolist()) - set(out.ids.tolist())
    assert {len(ds) - 3, len(ds) - 2, len(ds) - 1} <= removed


def test_baseline_without_outliers_is_identity():
    ds = csv("x,class\n1,p\n2,q\n3,p\n")      # classes too small to score
    out, rep = remove_outliers_baseline(ds)
    assert rep.outliers == [] and out == ds


def test_baseline_never_empties_a_class(caplog):
    # a tiny class spread out next to a dense one: every member scores high
    pts = np.r_[np.linspace(0, 1, 12), [5.0, 9.0]]
    ds = synthetic.from_points(pts, ["o"] * 12 + ["+"] * 2)
    with caplog.at_level("WARNING"):
        out, rep = remove_outliers_baseline(ds, PipelineConfig(min_pts=1, lof_threshold=0.5))
    assert {12, 13} <= set(rep.outliers)
    assert set(out.y.tolist()) == {0, 1}
    assert "would empty class" in caplog.text


@pytest.mark.parametrize("folds", [2, 3, 10])
def test_folds_partition_and_stratify(folds):
    ds = synthetic.planted_blobs(seed=0)
    parts = stratified_folds(ds, folds, seed=7)
    flat = np.concatenate(parts)
    assert sorted(flat.tolist()) == list(range(len(ds)))
    for c in range(2):
        per = [int((ds.y[p] == c).sum()) for p in parts]
        assert max(per) - min(per) <= 1
    assert [p.tolist() for p in stratified_folds(ds, folds, seed=7)] == [p.tolist() for p in parts]


def test_effective_folds_reduced_for_small_classes():
    ds = csv("x,class\n1,p\n2,p\n3,p\n4,q\n5,q\n6,q\n")
    assert effective_folds(ds, 10) == 3
    assert effective_folds(ds, 2) == 2


def test_tree_on_separable_data_is_perfect():
    ds = synthetic.two_blobs(seed=3, n=30)
    rep = cross_validate(ds, PipelineConfig(method="none", learner="tree"))
    m = rep.method("none")
    assert (m.test_mean, m.test_sd) == (100.0, 0.0)
    assert len(m.folds) == 10


def test_same_seed_same_report():
    ds = synthetic.planted_blobs(seed=2, n=40)
    cfg = PipelineConfig(seed=5)
    a = report.to_json([evaluate(ds, cfg, ["cobfc", "dcfringe", "baseline"])])
    b = report.to_json([evaluate(ds, cfg, ["cobfc", "dcfringe", "baseline"])])
    assert a == b


def test_parallel_folds_match_serial():
    ds = synthetic.planted_blobs(seed=2, n=40)
    serial = evaluate(ds, PipelineConfig(), ["cobfc"])
    parallel = evaluate(ds, PipelineConfig(jobs=2), ["cobfc"])
    assert report.to_json([serial]) == report.to_json([parallel])


def test_reference_method_always_first():
    ds = synthetic.planted_blobs(seed=2, n=40)
    rep = evaluate(ds, PipelineConfig(folds=3), ["baseline", "none"])
    assert [m.method for m in rep.methods] == ["none", "baseline"]


def test_leakage_check_trips():
    ds = csv("x,class\n1,p\n2,q\n3,p\n")
    train, test = ds.subset([0, 1]), ds.subset([1, 2])
    with pytest.raises(AssertionError):
        _check_no_leakage(train, test)


def test_verify_features_catches_a_bad_feature():
    ds = synthetic.planted_blobs(seed=0)
    built = construct_features(ds)
    origin = built.features[0].origin
    built.features.append(ConjunctiveFeature.from_tests([AttributeTest(0, LE, 100.0)], origin))
    with pytest.raises(AssertionError):
        verify_features(built, ds)


def test_config_validation():
    for bad in ({"folds": 1}, {"k": 0}, {"method": "x"}, {"learner": "svm"},
                {"min_support_pct": -1}):
        with pytest.raises(ValueError):
            PipelineConfig(**bad)


def _summary(name, train, test):
    return MethodSummary(name, train, 0.0, test, 0.0)


@pytest.mark.parametrize("train,test,want", [
    (90.0, 81.0, (True, False)),    # better test
    (95.0, 80.0, (False, True)),    # higher train, equal test
    (95.0, 79.0, (False, True)),    # higher train, lower test
    (90.0, 80.0, (False, False)),   # identical
    (85.0, 79.0, (False, False)),   # worse on both, not overfitting
    (95.0, 85.0, (True, False)),    # both higher
])
def test_flags(train, test, want):
    assert flags(_summary("none", 90.0, 80.0), _summary("cobfc", train, test)) == want


def _tiny_report():
    ref = MethodSummary("none", 90.0, 1.0, 80.0, 2.5, folds=[FoldResult(0, "none", 9)])
    cob = MethodSummary("cobfc", 91.0, 0.5, 82.346, 1.0, True, False,
                        [FoldResult(0, "cobfc", 9, outliers=2, features=3)])
    return EvalReport("toy", 10, 2, "nb", 42, [ref, cob])


def test_report_formats():
    assert json.loads(report.to_json([])) == {"runs": []}
    md = report.to_markdown([]).decode()
    assert md.startswith("| Data set |")
    md = report.to_markdown([_tiny_report()]).decode().splitlines()
    assert md[2] == "| toy | 90.00 ± 1.00 | 80.00 ± 2.50 | **82.35 ± 1.00** |"
    assert report.cell(1, 2, overfit=True) == "<u>1.00 ± 2.00</u>"
    with pytest.raises(ValueError):
        report.report([], "xml")


def test_json_round_trip():
    once = report.to_json([_tiny_report()])
    assert report.to_json(report.from_json(once)) == once


def test_fold_results_carry_statistics(data_dir):
    ds = read_dataset(data_dir / "iris.csv")
    rep = evaluate(ds, PipelineConfig(folds=3), ["cobfc", "dcfringe", "baseline"])
    for m in rep.methods:
        for f in m.folds:
            assert 0 <= f.train_accuracy <= 100 and 0 <= f.test_accuracy <= 100
            assert f.train_size == 100
    assert all(f.iterations >= 1 for f in rep.method("dcfringe").folds)
    assert all(f.features >= 0 for f in rep.method("cobfc").folds)
    q = rep.method("cobfc").quantities()
    assert q["outliers"] >= q["gated_outliers"]
    for m in rep.methods:
        assert not (m.improved and m.overfit)

"""Feature construction pipeline, comparison arms and stratified cross-validation."""

from __future__ import annotations

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .data import NOMINAL, Attribute, Dataset, EncodedView, choose_metric, encode
from .dcfringe import DEFAULT_MAX_ITERATIONS, apply_fringe_features, dc_fringe
from .learners import LEARNERS, accuracy
from .lof import ClassOutlierReport, LofParams, detect_class_outliers
from .neighborhood import (DEFAULT_K, Neighborhood, gate_mixed_class, k_neighborhood,
                           merge_neighborhoods, overlap)
from .ruleminer import ConjunctiveFeature, mine, theta_from_percent

log = logging.getLogger(__name__)

METHODS = ("none", "cobfc", "dcfringe", "baseline")


@dataclass(frozen=True)
class PipelineConfig:
    k: int = DEFAULT_K
    min_pts: int = 10
    lof_threshold: float = 1.5
    min_support_pct: float = 0.0
    metric: str | None = None
    learner: str = "nb"
    folds: int = 10
    seed: int = 42
    method: str = "cobfc"
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    jobs: int = 1
    verify: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}")
        if self.min_support_pct < 0:
            raise ValueError("min_support_pct must be >= 0")

    @property
    def lof_params(self) -> LofParams:
        return LofParams(self.min_pts, self.lof_threshold)


@dataclass
class Construction:
    """Everything one run of the CobFC pipeline produced on a training set."""

    features: list[ConjunctiveFeature]
    outliers: ClassOutlierReport
    neighborhoods: list[Neighborhood]
    gated: list[Neighborhood]
    merged: list[Neighborhood]
    theta: int
    metric: str

    def to_dict(self, dataset: Dataset) -> dict:
        names = [a.name for a in dataset.attributes]
        return {
            "metric": self.metric,
            "theta": self.theta,
            "outliers": self.outliers.to_dict(dataset),
            "neighborhoods": [n.to_dict(dataset) for n in self.gated],
            "merged_neighborhoods": [n.to_dict(dataset) for n in self.merged],
            "features": [f.to_dict(names) for f in self.features],
        }


def construct_features(train: Dataset, config: PipelineConfig | None = None) -> Construction:
    """Detect class outliers, gate and merge their neighborhoods, mine features."""
    config = config or PipelineConfig()
    if len(np.unique(train.y)) < 2:
        raise ValueError("feature construction needs at least two classes")
    metric = config.metric or choose_metric(train)
    view = encode(train, metric)
    report = detect_class_outliers(train, view, config.lof_params)
    k = min(config.k, len(train) - 1)
    hoods = [k_neighborhood(view, o, k) for o in report.outliers]
    gated = [n for n in hoods if gate_mixed_class(n, train)]
    merged = merge_neighborhoods(gated)
    theta = theta_from_percent(config.min_support_pct, len(train))
    features = mine(merged, train, theta)
    return Construction(features, report, hoods, gated, merged, theta, metric)


def augment(data: Dataset, features: Sequence[ConjunctiveFeature]) -> Dataset:
    """Append one {0,1} column per feature, evaluated against ``data``'s own attributes."""
    if not features:
        return data
    names = [a.name for a in data.attributes]
    attrs, cols = [], []
    for f in features:
        attrs.append(Attribute(f.column_name(names), NOMINAL, ("0", "1")))
        cols.append(["1" if v else "0" for v in f.mask(data)])
    return data.with_columns(attrs, cols)


def remove_outliers_baseline(train: Dataset, config: PipelineConfig | None = None,
                             view: EncodedView | None = None) -> tuple[Dataset, ClassOutlierReport]:
    """Training data without its class outliers.

    A class that would vanish keeps its lowest-scoring instance.
    """
    config = config or PipelineConfig()
    view = view or encode(train, config.metric or choose_metric(train))
    report = detect_class_outliers(train, view, config.lof_params)
    drop = set(report.outliers)
    for c, label in enumerate(train.classes):
        rows = np.flatnonzero(train.y == c)
        if len(rows) and all(r in drop for r in rows):
            keep = min(rows, key=lambda r: (report.scores[label][r], r))
            drop.discard(int(keep))
            log.warning("removing outliers would empty class %r; keeping row %d", label, keep)
    kept = [r for r in range(len(train)) if r not in drop]
    return train.subset(kept), report


# ---------------------------------------------------------------------------
# post-hoc checks, independent of the miner's own filter

def verify_features(construction: Construction, train: Dataset) -> None:
    """Re-check consistency and support of every feature by brute force.

    Raises ``AssertionError`` on the first violation; also checks that no pair
    of merged neighborhoods still satisfies the merge predicate.
    """
    by_origin = {}
    for n in construction.merged:
        by_origin[tuple(sorted(int(train.instances[s].id) for s in n.sources))] = n
    for f in construction.features:
        n = by_origin.get(tuple(f.origin))
        assert n is not None, f"feature origin {f.origin} matches no merged neighborhood"
        labels = {train.instances[r].label for r in n.rows
                  if all(_brute_match(t, train.instances[r].values[t.attribute]) for t in f.tests)}
        assert len(labels) <= 1, f"inconsistent feature {f.tests}"
        support = sum(all(_brute_match(t, inst.values[t.attribute]) for t in f.tests)
                      for inst in train.instances)
        assert support >= construction.theta, f"feature support {support} < {construction.theta}"
    merged = construction.merged
    for i in range(len(merged)):
        for j in range(i + 1, len(merged)):
            assert overlap(merged[i], merged[j]) < 0.5, "merge fixed point violated"


def _brute_match(test, value) -> bool:
    if test.op == "missing":
        return value is None
    if value is None:
        return False
    if test.op == "=":
        return value == test.operand
    if test.op == "<=":
        return value <= test.operand
    return value > test.operand


# ---------------------------------------------------------------------------
# cross-validation

@dataclass
class FoldResult:
    fold: int
    method: str
    train_size: int
    outliers: int = 0
    gated_outliers: int = 0
    classes_without_outliers: int = 0
    merged_neighborhoods: int = 0
    features: int = 0
    iterations: int | None = None
    train_accuracy: float = 0.0
    test_accuracy: float = 0.0


@dataclass
class MethodSummary:
    method: str
    train_mean: float
    train_sd: float
    test_mean: float
    test_sd: float
    improved: bool = False
    overfit: bool = False
    folds: list[FoldResult] = field(default_factory=list)

    def quantities(self) -> dict:
        """Per-fold means of the construction statistics."""
        def mean(name):
            vals = [getattr(f, name) for f in self.folds if getattr(f, name) is not None]
            return float(np.mean(vals)) if vals else None
        return {
            "outliers": mean("outliers"),
            "gated_outliers": mean("gated_outliers"),
            "classes_without_outliers": mean("classes_without_outliers"),
            "folds_without_outliers": sum(f.outliers == 0 for f in self.folds),
            "merged_neighborhoods": mean("merged_neighborhoods"),
            "features": mean("features"),
            "iterations": mean("iterations"),
        }


@dataclass
class EvalReport:
    dataset: str
    n_instances: int
    folds: int
    learner: str
    seed: int
    methods: list[MethodSummary] = field(default_factory=list)

    def method(self, name: str) -> MethodSummary:
        for m in self.methods:
            if m.method == name:
                return m
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_instances": self.n_instances,
            "folds": self.folds,
            "learner": self.learner,
            "seed": self.seed,
            "methods": [
                {
                    "method": m.method,
                    "train_mean": m.train_mean,
                    "train_sd": m.train_sd,
                    "test_mean": m.test_mean,
                    "test_sd": m.test_sd,
                    "improved": m.improved,
                    "overfit": m.overfit,
                    "quantities": m.quantities(),
                    "folds": [asdict(f) for f in m.folds],
                }
                for m in self.methods
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        methods = [
            MethodSummary(m["method"], m["train_mean"], m["train_sd"], m["test_mean"],
                          m["test_sd"], m["improved"], m["overfit"],
                          [FoldResult(**f) for f in m["folds"]])
            for m in d["methods"]
        ]
        return cls(d["dataset"], d["n_instances"], d["folds"], d["learner"], d["seed"], methods)


def flags(reference: MethodSummary, summary: MethodSummary) -> tuple[bool, bool]:
    """(improved, overfit) of ``summary`` relative to the unaugmented run.

    Improved: higher test accuracy. Overfit: higher training accuracy with
    equal or lower test accuracy.
    """
    improved = summary.test_mean > reference.test_mean
    overfit = summary.train_mean > reference.train_mean and summary.test_mean <= reference.test_mean
    return improved, overfit


def stratified_folds(data: Dataset, folds: int, seed: int) -> list[np.ndarray]:
    """Row positions per fold: seeded shuffle within each class, then round-robin."""
    rng = random.Random(seed)
    assign = np.empty(len(data), dtype=np.int64)
    offset = 0
    for c in range(len(data.classes)):
        rows = [int(r) for r in np.flatnonzero(data.y == c)]
        rng.shuffle(rows)
        for i, r in enumerate(rows):
            assign[r] = (offset + i) % folds
        offset = (offset + len(rows)) % folds
    return [np.flatnonzero(assign == f) for f in range(folds)]


def effective_folds(data: Dataset, folds: int) -> int:
    counts = data.class_counts()
    smallest = int(counts[counts > 0].min())
    if smallest < folds:
        reduced = max(2, smallest)
        log.warning("smallest class has %d instances; using %d folds instead of %d",
                    smallest, reduced, folds)
        return reduced
    return folds


def _check_no_leakage(train: Dataset, test: Dataset, rows_seen: Sequence[int] = ()) -> None:
    train_ids = set(train.ids.tolist())
    test_ids = set(test.ids.tolist())
    assert not train_ids & test_ids, "test instances present in the training fold"
    seen = {int(train.instances[r].id) for r in rows_seen}
    assert seen <= train_ids and not seen & test_ids, "a pipeline stage saw test instances"


def run_method(method: str, train: Dataset, test: Dataset, config: PipelineConfig,
               fold: int = 0) -> FoldResult:
    """Preprocess ``train`` (training folds only), fit the learner, score both sides."""
    _check_no_leakage(train, test)
    result = FoldResult(fold, method, len(train))
    if method == "cobfc":
        built = construct_features(train, config)
        seen = list(built.outliers.outliers)
        for n in built.neighborhoods:
            seen.extend(n.rows)
        _check_no_leakage(train, test, seen)
        if config.verify:
            verify_features(built, train)
        train, test = augment(train, built.features), augment(test, built.features)
        _fill_outlier_stats(result, built.outliers)
        result.gated_outliers = len(built.gated)
        result.merged_neighborhoods = len(built.merged)
        result.features = len(built.features)
    elif method == "dcfringe":
        fr = dc_fringe(train, config.max_iterations)
        train, test = fr.dataset, apply_fringe_features(test, fr.features)
        result.features = len(fr.features)
        result.iterations = fr.iterations
    elif method == "baseline":
        train, report = remove_outliers_baseline(train, config)
        _check_no_leakage(train, test, [])
        _fill_outlier_stats(result, report)
    model = LEARNERS[config.learner](train)
    result.train_accuracy = accuracy(model, train)
    result.test_accuracy = accuracy(model, test)
    return result


def _fill_outlier_stats(result: FoldResult, report: ClassOutlierReport) -> None:
    result.outliers = len(report.outliers)
    result.classes_without_outliers = report.classes_without_outliers


def _fold_task(args):
    data, train_rows, test_rows, methods, config, fold = args
    train, test = data.subset(train_rows), data.subset(test_rows)
    return [run_method(m, train, test, config, fold) for m in methods]


def evaluate(data: Dataset, config: PipelineConfig | None = None,
             methods: Sequence[str] | None = None, name: str | None = None) -> EvalReport:
    """Cross-validate several methods on shared folds; ``none`` is always included."""
    config = config or PipelineConfig()
    methods = list(methods or [config.method])
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    methods = ["none"] + [m for m in dict.fromkeys(methods) if m != "none"]
    folds = effective_folds(data, config.folds)
    parts = stratified_folds(data, folds, config.seed)
    tasks = []
    for f, test_rows in enumerate(parts):
        train_rows = np.sort(np.concatenate([p for g, p in enumerate(parts) if g != f]))
        tasks.append((data, train_rows, test_rows, methods, config, f))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_fold = list(pool.map(_fold_task, tasks))
    else:
        per_fold = [_fold_task(t) for t in tasks]

    report = EvalReport(name or data.relation, len(data), folds, config.learner, config.seed)
    for i, m in enumerate(methods):
        fold_results = [fr[i] for fr in per_fold]
        tr = np.array([r.train_accuracy for r in fold_results])
        te = np.array([r.test_accuracy for r in fold_results])
        report.methods.append(MethodSummary(
            m, float(tr.mean()), float(tr.std(ddof=1)), float(te.mean()), float(te.std(ddof=1)),
            folds=fold_results))
    ref = report.methods[0]
    for s in report.methods[1:]:
        s.improved, s.overfit = flags(ref, s)
    return report


def cross_validate(data: Dataset, config: PipelineConfig | None = None) -> EvalReport:
    config = config or PipelineConfig()
    return evaluate(data, config, [config.method])

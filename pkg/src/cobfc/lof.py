"""Local outlier factor and per-class outlier detection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, EncodedView

log = logging.getLogger(__name__)

LRD_CAP = 1e12
DEFAULT_MIN_PTS = 10
DEFAULT_THRESHOLD = 1.5


@dataclass(frozen=True)
class LofParams:
    min_pts: int = DEFAULT_MIN_PTS
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")


@dataclass
class ClassOutlierReport:
    """Per-class LOF scores (keyed by row position) and the union of flagged rows."""

    scores: dict[str, dict[int, float]] = field(default_factory=dict)
    outliers: list[int] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    classes_without_outliers: int = 0

    def score_of(self, row: int) -> float:
        for per_class in self.scores.values():
            if row in per_class:
                return per_class[row]
        raise KeyError(row)

    def to_dict(self, dataset: Dataset | None = None) -> dict:
        """JSON-ready form; rows are mapped to instance ids when ``dataset`` is given."""
        ident = (lambda r: int(dataset.instances[r].id)) if dataset is not None else int
        return {
            "outliers": [ident(r) for r in self.outliers],
            "counts": dict(self.counts),
            "classes_without_outliers": self.classes_without_outliers,
            "scores": {c: {str(ident(r)): s for r, s in sorted(per.items())}
                       for c, per in self.scores.items()},
        }


def lof_from_distances(dist: np.ndarray, min_pts: int) -> np.ndarray:
    """LOF scores for every row of a square distance matrix.

    The k-distance neighborhood of ``p`` holds every other point within the
    distance of its ``min_pts``-th nearest neighbor, ties included.
    """
    n = dist.shape[0]
    if n <= min_pts:
        raise ValueError(f"LOF needs more than min_pts={min_pts} points, got {n}")
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    kdist = np.sort(d, axis=1)[:, min_pts - 1]
    neigh = d <= kdist[:, None]
    # reach-dist(p, o) = max(k-distance(o), d(p, o))
    reach = np.maximum(kdist[None, :], dist)
    lrd = np.empty(n)
    members = []
    for p in range(n):
        idx = np.flatnonzero(neigh[p])  # ascending row order
        members.append(idx)
        total = reach[p, idx].sum()
        lrd[p] = LRD_CAP if total <= 0 else min(len(idx) / total, LRD_CAP)
    scores = np.empty(n)
    for p in range(n):
        idx = members[p]
        scores[p] = (lrd[idx] / lrd[p]).sum() / len(idx)
    return scores


def lof_scores(view: EncodedView, subset: Sequence[int], params: LofParams) -> dict[int, float]:
    """LOF scores of ``subset`` rows computed only among themselves."""
    rows = np.array(sorted(subset), dtype=np.int64)
    dist = view.full_matrix[np.ix_(rows, rows)]
    scores = lof_from_distances(dist, params.min_pts)
    return {int(r): float(s) for r, s in zip(rows, scores)}


def detect_class_outliers(dataset: Dataset, view: EncodedView,
                          params: LofParams | None = None) -> ClassOutlierReport:
    """Flag rows whose LOF within their own class exceeds the threshold.

    Classes with at most ``min_pts`` instances are skipped and yield no
    outliers.
    """
    params = params or LofParams()
    report = ClassOutlierReport()
    flagged: list[int] = []
    y = dataset.y
    for c, label in enumerate(dataset.classes):
        rows = np.flatnonzero(y == c)
        if len(rows) == 0:
            continue
        if len(rows) <= params.min_pts:
            report.counts[label] = 0
            report.classes_without_outliers += 1
            continue
        scores = lof_scores(view, rows, params)
        report.scores[label] = scores
        hits = [r for r, s in scores.items() if s > params.threshold]
        report.counts[label] = len(hits)
        if not hits:
            report.classes_without_outliers += 1
        flagged.extend(hits)
    report.outliers = sorted(flagged)
    return report

"""k-neighborhoods of class outliers: assembly, mixed-class gate, merging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data import Dataset, EncodedView

DEFAULT_K = 10


@dataclass(frozen=True)
class Neighborhood:
    """Row positions of an outlier neighborhood.

    ``members`` never contains the sources unless another source's
    neighborhood pulled them in through a merge.
    """

    sources: frozenset[int]
    members: frozenset[int]

    @property
    def rows(self) -> list[int]:
        """Members and sources, sorted; the instance set handed to the miner."""
        return sorted(self.members | self.sources)

    def class_histogram(self, dataset: Dataset) -> dict[str, int]:
        counts = np.bincount(dataset.y[self.rows], minlength=len(dataset.classes))
        return {c: int(n) for c, n in zip(dataset.classes, counts) if n}

    def to_dict(self, dataset: Dataset | None = None) -> dict:
        ident = (lambda r: int(dataset.instances[r].id)) if dataset is not None else int
        out = {
            "sources": sorted(ident(r) for r in self.sources),
            "members": sorted(ident(r) for r in self.members),
        }
        if dataset is not None:
            out["class_histogram"] = self.class_histogram(dataset)
        return out


def k_neighborhood(view: EncodedView, d: int, k: int) -> Neighborhood:
    """Rows other than ``d`` with at most ``k - 1`` rows strictly closer to ``d``."""
    n = len(view)
    if not 0 < k < n:
        raise ValueError(f"k must satisfy 0 < k < {n}, got {k}")
    dist = view.full_matrix[d].copy()
    dist[d] = np.inf
    kth = np.sort(dist)[k - 1]
    members = np.flatnonzero(dist <= kth)
    return Neighborhood(frozenset([d]), frozenset(int(m) for m in members))


def gate_mixed_class(n: Neighborhood, dataset: Dataset) -> bool:
    """True iff the neighborhood (sources included) spans at least two labels."""
    return len(np.unique(dataset.y[n.rows])) >= 2


def overlap(a: Neighborhood, b: Neighborhood) -> float:
    smaller = min(len(a.members), len(b.members))
    if smaller == 0:
        return 0.0
    return len(a.members & b.members) / smaller


def merge_neighborhoods(ns: Iterable[Neighborhood], ratio: float = 0.5) -> list[Neighborhood]:
    """Merge pairs sharing at least ``ratio`` of the smaller member set until none do.

    Each step merges the pair with the largest overlap; ties go to the pair
    with the smallest (min source of A, min source of B).
    """
    current = sorted(set(ns), key=_key)
    while True:
        best = None
        for i in range(len(current)):
            for j in range(i + 1, len(current)):
                a, b = current[i], current[j]
                r = overlap(a, b)
                if r < ratio:
                    continue
                cand = (-r, _key(a), _key(b))
                if best is None or cand < best[0]:
                    best = (cand, i, j)
        if best is None:
            return current
        _, i, j = best
        a, b = current[i], current[j]
        merged = Neighborhood(a.sources | b.sources, a.members | b.members)
        rest = [x for t, x in enumerate(current) if t not in (i, j)]
        current = sorted(set(rest) | {merged}, key=_key)


def _key(n: Neighborhood):
    return (min(n.sources), sorted(n.sources), sorted(n.members))

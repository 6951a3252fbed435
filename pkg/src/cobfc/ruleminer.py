"""Conjunctive features mined from outlier neighborhoods with unpruned trees."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import tree
from .data import Dataset
from .neighborhood import Neighborhood
from .tree import EQ, GT, LE, MISSING, AttributeTest, TreeNode


def canonicalize(tests: Iterable[AttributeTest]) -> tuple[AttributeTest, ...]:
    """Sorted, bound-tightened form of a conjunction.

    Per attribute at most one ``<=`` (the smallest) and one ``>`` (the
    largest) survive. Two different equalities on one attribute are
    contradictory and raise ``ValueError``.
    """
    upper: dict[int, float] = {}
    lower: dict[int, float] = {}
    equal: dict[int, str] = {}
    missing: set[int] = set()
    for t in tests:
        a = t.attribute
        if t.op == LE:
            upper[a] = min(upper.get(a, t.operand), t.operand)
        elif t.op == GT:
            lower[a] = max(lower.get(a, t.operand), t.operand)
        elif t.op == EQ:
            if a in equal and equal[a] != t.operand:
                raise ValueError(f"contradictory equalities on attribute {a}")
            equal[a] = t.operand
        else:
            missing.add(a)
    out = [AttributeTest(a, LE, float(v)) for a, v in upper.items()]
    out += [AttributeTest(a, GT, float(v)) for a, v in lower.items()]
    out += [AttributeTest(a, EQ, v) for a, v in equal.items()]
    out += [AttributeTest(a, MISSING) for a in missing]
    return tuple(sorted(out, key=AttributeTest.sort_key))


@dataclass(frozen=True)
class ConjunctiveFeature:
    tests: tuple[AttributeTest, ...]
    origin: tuple[int, ...] = field(default=(), compare=False)
    predicted_class: str | None = field(default=None, compare=False)

    @classmethod
    def from_tests(cls, tests, origin=(), predicted_class=None) -> "ConjunctiveFeature":
        return cls(canonicalize(tests), tuple(origin), predicted_class)

    @property
    def key(self):
        return tuple(t.sort_key() for t in self.tests)

    def mask(self, dataset: Dataset) -> np.ndarray:
        out = np.ones(len(dataset), dtype=bool)
        for t in self.tests:
            out &= t.mask(dataset)
        return out

    def matches(self, values: Sequence) -> bool:
        return all(t.matches(values[t.attribute]) for t in self.tests)

    def to_text(self, names: Sequence[str]) -> str:
        return " AND ".join(t.to_text(names) for t in self.tests) or "TRUE"

    def column_name(self, names: Sequence[str]) -> str:
        digest = hashlib.sha1(self.to_text(names).encode()).hexdigest()[:10]
        return f"f_{digest}"

    def to_dict(self, names: Sequence[str]) -> dict:
        return {
            "name": self.column_name(names),
            "rule": self.to_text(names),
            "tests": [t.to_dict(names) for t in self.tests],
            "origin": list(self.origin),
            "predicted_class": self.predicted_class,
        }


def grow_tree(dataset: Dataset, rows: Sequence[int] | None = None) -> TreeNode:
    """Unpruned tree with at least one instance per branch."""
    return tree.grow(dataset, rows, min_obj=1)


def extract_rules(root: TreeNode, dataset: Dataset, origin: Sequence[int] = ()) -> list[ConjunctiveFeature]:
    return [ConjunctiveFeature.from_tests(path, origin, dataset.classes[leaf.prediction])
            for path, leaf in root.leaves()]


def cover(feature: ConjunctiveFeature, dataset: Dataset,
          rows: Sequence[int] | None = None) -> np.ndarray:
    """Row positions (restricted to ``rows`` when given) matched by ``feature``."""
    hit = feature.mask(dataset)
    if rows is None:
        return np.flatnonzero(hit)
    rows = np.asarray(rows, dtype=np.int64)
    return rows[hit[rows]]


def is_consistent(feature: ConjunctiveFeature, rows: Sequence[int], dataset: Dataset) -> bool:
    covered = cover(feature, dataset, rows)
    return len(np.unique(dataset.y[covered])) <= 1


def filter_features(features: Iterable[ConjunctiveFeature], rows: Sequence[int],
                    dataset: Dataset, theta: int, seen: set | None = None) -> list[ConjunctiveFeature]:
    """Keep non-empty, consistent features with support >= ``theta`` not kept before."""
    if theta < 1:
        raise ValueError("theta must be >= 1")
    seen = set() if seen is None else seen
    kept = []
    for f in features:
        if not f.tests or f.key in seen:
            continue
        if not is_consistent(f, rows, dataset):
            continue
        if f.mask(dataset).sum() < theta:
            continue
        seen.add(f.key)
        kept.append(f)
    return kept


def mine(neighborhoods: Iterable[Neighborhood], dataset: Dataset, theta: int = 1) -> list[ConjunctiveFeature]:
    """Tree rules from every neighborhood, filtered and deduplicated."""
    seen: set = set()
    out: list[ConjunctiveFeature] = []
    for n in sorted(neighborhoods, key=lambda n: min(n.sources)):
        rows = n.rows
        if len(np.unique(dataset.y[rows])) < 2:
            continue
        origin = sorted(int(dataset.instances[s].id) for s in n.sources)
        rules = extract_rules(grow_tree(dataset, rows), dataset, origin)
        out.extend(filter_features(rules, rows, dataset, theta, seen))
    return sorted(out, key=lambda f: f.key)


def theta_from_percent(percent: float, n: int) -> int:
    """Support count for a percentage of ``n`` training instances (at least 1)."""
    if percent < 0:
        raise ValueError("support percentage must be >= 0")
    return max(1, int(np.ceil(percent / 100.0 * n - 1e-9)))

"""Iterated DC-Fringe feature construction from pruned decision trees.

Every leaf at depth two or more contributes AND and OR combinations of its
last test with the grandparent's tests (see ``fringe_candidates``). New columns are appended as {0,1} attributes and the
tree is relearned until two consecutive trees are identical, no new column
appears, or the iteration cap is hit.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tree
from .data import NOMINAL, Attribute, Dataset
from .learners import CONFIDENCE, MIN_OBJ, train_tree
from .tree import AttributeTest

log = logging.getLogger(__name__)

AND, OR = "AND", "OR"
DEFAULT_MAX_ITERATIONS = 100
BINARY = ("0", "1")


@dataclass(frozen=True)
class FringeFeature:
    """A binary combination of two tests; attribute indices refer to the schema
    the feature was built on (base attributes plus earlier constructed ones)."""

    combinator: str
    operands: tuple[AttributeTest, AttributeTest]
    text: str = field(compare=False, default="")

    def __post_init__(self):
        if self.combinator not in (AND, OR):
            raise ValueError(f"unknown combinator {self.combinator!r}")
        if self.operands[0] == self.operands[1]:
            raise ValueError("operands must differ")

    @classmethod
    def build(cls, combinator: str, a: AttributeTest, b: AttributeTest,
              names: Sequence[str]) -> "FringeFeature":
        pair = tuple(sorted((a, b), key=AttributeTest.sort_key))
        text = f" {combinator} ".join(f"({t.to_text(names)})" for t in pair)
        return cls(combinator, pair, text)

    @property
    def name(self) -> str:
        return "f_" + hashlib.sha1(self.text.encode()).hexdigest()[:10]

    def mask(self, dataset: Dataset) -> np.ndarray:
        a, b = (t.mask(dataset) for t in self.operands)
        return (a & b) if self.combinator == AND else (a | b)

    def to_dict(self, names: Sequence[str]) -> dict:
        return {
            "name": self.name,
            "rule": self.text,
            "combinator": self.combinator,
            "operands": [t.to_dict(names) for t in self.operands],
        }


@dataclass
class FringeResult:
    features: list[FringeFeature]
    dataset: Dataset
    iterations: int
    signatures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        names = [a.name for a in self.dataset.attributes]
        return {"iterations": self.iterations,
                "features": [f.to_dict(names) for f in self.features]}


def _binary_column(mask: np.ndarray) -> list[str]:
    return [BINARY[int(v)] for v in mask]


def append_feature(dataset: Dataset, feature: FringeFeature) -> Dataset:
    attr = Attribute(feature.name, NOMINAL, BINARY)
    return dataset.with_columns([attr], [_binary_column(feature.mask(dataset))])


def apply_fringe_features(dataset: Dataset, features: Sequence[FringeFeature]) -> Dataset:
    """Append constructed columns in construction order (later ones may reference earlier ones)."""
    for f in features:
        dataset = append_feature(dataset, f)
    return dataset


def fringe_candidates(root: tree.TreeNode, names: Sequence[str]) -> list[FringeFeature]:
    """AND and OR candidates for each leaf at depth >= 2.

    The leaf's last test is paired with the test leading from the grandparent
    to every non-leaf child of the grandparent, the leaf's own parent first.
    """
    out = []

    def walk(node, grand_edges):
        for test, child in node.children:
            if child.is_leaf and grand_edges is not None:
                parent_test, siblings = grand_edges
                for sib_test in [parent_test] + siblings:
                    if sib_test == test:
                        continue
                    out.append(FringeFeature.build(AND, sib_test, test, names))
                    out.append(FringeFeature.build(OR, sib_test, test, names))
            elif not child.is_leaf:
                others = [t for t, c in node.children if c is not child and not c.is_leaf]
                walk(child, (test, others))

    walk(root, None)
    return out


def dc_fringe(dataset: Dataset, max_iterations: int = DEFAULT_MAX_ITERATIONS,
              confidence: float = CONFIDENCE, min_obj: int = MIN_OBJ) -> FringeResult:
    if len(np.unique(dataset.y)) < 2:
        raise ValueError("DC-Fringe needs at least two classes")
    current = dataset
    features: list[FringeFeature] = []
    signatures: list[str] = []
    iterations = 0
    columns = {_column_key(current.numeric[:, j], current.codes[:, j])
               for j in range(len(current.attributes))}
    seen_text = set()
    while iterations < max_iterations:
        iterations += 1
        model = train_tree(current, confidence, min_obj)
        sig = tree.signature(model.root, current)
        if signatures and sig == signatures[-1]:
            signatures.append(sig)
            break
        signatures.append(sig)
        names = [a.name for a in current.attributes]
        added = []
        for cand in fringe_candidates(model.root, names):
            if cand.text in seen_text:
                continue
            seen_text.add(cand.text)
            mask = cand.mask(current)
            if mask.all() or not mask.any():
                continue
            key = _column_key(np.where(mask, 1.0, 0.0), np.zeros(len(mask), dtype=np.int64))
            if key in columns:
                continue
            columns.add(key)
            added.append(cand)
        if not added:
            break
        # candidates only reference columns present before this round, so appending in order is safe
        for f in added:
            current = append_feature(current, f)
        features.extend(added)
        log.debug("dc-fringe iteration %d added %d features", iterations, len(added))
    return FringeResult(features, current, iterations, signatures)


def _column_key(numeric: np.ndarray, codes: np.ndarray):
    """Hashable identity of a column's partition of the rows."""
    if np.isnan(numeric).all():
        _, inv = np.unique(codes, return_inverse=True)
    else:
        _, inv = np.unique(np.nan_to_num(numeric, nan=np.inf), return_inverse=True)
    # relabel by first occurrence so complementary binary columns collide too
    first = {}
    return tuple(first.setdefault(int(v), len(first)) for v in inv.ravel())

"""C4.5-style decision trees: gain-ratio splits, missing-value branches, pruning.

Shared by the unpruned miner (``min_obj=1``) and the pruned evaluation tree
(``min_obj=2``, pessimistic-error pruning at confidence 0.25).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.stats import beta

from .data import Dataset, format_number

LE, GT, EQ, MISSING = "<=", ">", "=", "missing"
OP_RANK = {LE: 0, GT: 1, EQ: 2, MISSING: 3}

_EPS = 1e-12


@dataclass(frozen=True)
class AttributeTest:
    attribute: int
    op: str
    operand: float | str | None = None

    def __post_init__(self):
        if self.op not in OP_RANK:
            raise ValueError(f"unknown test op {self.op!r}")
        if self.op in (LE, GT) and not np.isfinite(self.operand):
            raise ValueError("numeric threshold must be finite")

    def sort_key(self):
        operand = self.operand
        return (self.attribute, OP_RANK[self.op],
                "" if operand is None else operand if isinstance(operand, str) else "",
                operand if isinstance(operand, float) else 0.0)

    def mask(self, dataset: Dataset) -> np.ndarray:
        """Rows of ``dataset`` satisfying the test; missing values only match ``missing``."""
        a = self.attribute
        if self.op == MISSING:
            return dataset.missing[:, a].copy()
        if self.op == EQ:
            attr = dataset.attributes[a]
            if self.operand not in attr.values:
                return np.zeros(len(dataset), dtype=bool)
            return dataset.codes[:, a] == attr.value_index(self.operand)
        col = dataset.numeric[:, a]
        with np.errstate(invalid="ignore"):
            return (col <= self.operand) if self.op == LE else (col > self.operand)

    def matches(self, value) -> bool:
        if value is None:
            return self.op == MISSING
        if self.op == MISSING:
            return False
        if self.op == EQ:
            return value == self.operand
        return value <= self.operand if self.op == LE else value > self.operand

    def to_text(self, names: Sequence[str]) -> str:
        name = names[self.attribute]
        if self.op == MISSING:
            return f"{name}=?"
        if self.op == EQ:
            return f"{name}={self.operand}"
        return f"{name}{self.op}{format_number(self.operand)}"

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        attr = names[self.attribute] if names is not None else self.attribute
        return {"attr": attr, "op": self.op, "operand": self.operand}


@dataclass
class TreeNode:
    histogram: np.ndarray
    rows: np.ndarray
    attribute: int | None = None
    threshold: float | None = None
    children: list[tuple[AttributeTest, "TreeNode"]] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.histogram))

    @property
    def errors(self) -> int:
        return int(self.histogram.sum() - self.histogram.max())

    def leaves(self, path: tuple = ()) -> Iterator[tuple[tuple[AttributeTest, ...], "TreeNode"]]:
        """Yield ``(path tests, leaf)`` in pre-order."""
        if self.is_leaf:
            yield path, self
            return
        for test, child in self.children:
            yield from child.leaves(path + (test,))

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.depth() for _, c in self.children)

    def size(self) -> int:
        return 1 + sum(c.size() for _, c in self.children)


def entropy(counts: np.ndarray) -> np.ndarray:
    """Base-2 entropy along the last axis; zero rows give 0."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=-1)


def split_scores(parts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Information gain, split information and gain ratio.

    ``parts`` has shape (..., branches, classes) with class counts per branch.
    """
    parts = np.asarray(parts, dtype=float)
    sizes = parts.sum(axis=-1)
    n = sizes.sum(axis=-1)
    base = entropy(parts.sum(axis=-2))
    info = (sizes * entropy(parts)).sum(axis=-1) / n
    gain = base - info
    split_info = entropy(sizes)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(split_info > _EPS, gain / split_info, 0.0)
    return gain, split_info, ratio


@dataclass(frozen=True)
class _Candidate:
    gain: float
    ratio: float
    attribute: int
    threshold: float | None

    @property
    def order(self):
        return (self.attribute, -np.inf if self.threshold is None else self.threshold)


def _numeric_candidate(values, y, m, miss_counts, min_obj, attr) -> _Candidate | None:
    known = ~np.isnan(values)
    v, lab = values[known], y[known]
    if len(v) == 0:
        return None
    order = np.argsort(v, kind="stable")
    v, lab = v[order], lab[order]
    cum = np.cumsum(np.eye(m, dtype=np.int64)[lab], axis=0)
    total = cum[-1]
    cut = np.flatnonzero(v[1:] > v[:-1]) + 1  # left side = first `cut` sorted values
    cut = cut[(cut >= min_obj) & (len(v) - cut >= min_obj)]
    if miss_counts.sum() >= min_obj and len(v) >= min_obj:
        # known vs missing: everything known goes left, right branch is empty
        cut = np.append(cut, len(v))
    if len(cut) == 0:
        return None
    left = cum[cut - 1]
    right = total[None, :] - left
    branches = [left, right]
    if miss_counts.sum():
        branches.append(np.broadcast_to(miss_counts, left.shape))
    gain, split_info, ratio = split_scores(np.stack(branches, axis=1))
    ok = split_info > _EPS
    if not ok.any():
        return None
    gain = np.where(ok, gain, -np.inf)
    best = int(np.flatnonzero(gain >= gain.max() - _EPS)[0])
    lo = v[cut[best] - 1]
    if cut[best] == len(v):
        thr = lo
    else:
        hi = v[cut[best]]
        thr = (lo + hi) / 2.0
        if not lo <= thr < hi:
            thr = lo
    return _Candidate(float(gain[best]), float(ratio[best]), attr, float(thr))


def _nominal_candidate(codes, y, m, n_values, min_obj, attr) -> _Candidate | None:
    idx = np.where(codes < 0, n_values, codes)
    parts = np.zeros((n_values + 1, m), dtype=np.int64)
    np.add.at(parts, (idx, y), 1)
    parts = parts[parts.sum(axis=1) > 0]
    if (parts.sum(axis=1) >= min_obj).sum() < 2:
        return None
    gain, split_info, ratio = split_scores(parts)
    if split_info <= _EPS:
        return None
    return _Candidate(float(gain), float(ratio), attr, None)


def best_split(dataset: Dataset, rows: np.ndarray, min_obj: int,
               attributes: Sequence[int] | None = None) -> _Candidate | None:
    """Pick the split for ``rows``.

    Among tests with positive gain and at least average gain, the highest gain
    ratio wins, ties to (lower attribute index, lower threshold). When no test
    has positive gain, the first valid test in that order is used so impure
    nodes keep splitting while instances are distinguishable.
    """
    y = dataset.y[rows]
    m = len(dataset.classes)
    cands = []
    for a in (range(len(dataset.attributes)) if attributes is None else attributes):
        attr = dataset.attributes[a]
        if attr.is_numeric:
            col = dataset.numeric[rows, a]
            miss = np.bincount(y[np.isnan(col)], minlength=m)
            c = _numeric_candidate(col, y, m, miss, min_obj, a)
        else:
            c = _nominal_candidate(dataset.codes[rows, a], y, m, len(attr.values), min_obj, a)
        if c is not None:
            cands.append(c)
    if not cands:
        return None
    positive = [c for c in cands if c.gain > _EPS]
    if not positive:
        return min(cands, key=lambda c: c.order)
    avg = sum(c.gain for c in positive) / len(positive)
    eligible = [c for c in positive if c.gain >= avg - 1e-9]
    top = max(c.ratio for c in eligible)
    return min((c for c in eligible if c.ratio >= top - 1e-12), key=lambda c: c.order)


def _partition(dataset: Dataset, rows: np.ndarray, cand: _Candidate):
    a = cand.attribute
    attr = dataset.attributes[a]
    out = []
    if attr.is_numeric:
        col = dataset.numeric[rows, a]
        miss = np.isnan(col)
        with np.errstate(invalid="ignore"):
            out.append((AttributeTest(a, LE, cand.threshold), rows[~miss & (col <= cand.threshold)]))
            out.append((AttributeTest(a, GT, cand.threshold), rows[~miss & (col > cand.threshold)]))
        out.append((AttributeTest(a, MISSING), rows[miss]))
    else:
        codes = dataset.codes[rows, a]
        for k, value in enumerate(attr.values):
            out.append((AttributeTest(a, EQ, value), rows[codes == k]))
        out.append((AttributeTest(a, MISSING), rows[codes < 0]))
    return [(t, r) for t, r in out if len(r)]


def grow(dataset: Dataset, rows: Sequence[int] | None = None, min_obj: int = 1) -> TreeNode:
    """Grow an unpruned tree over ``rows`` (all rows by default)."""
    rows = np.arange(len(dataset)) if rows is None else np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        raise ValueError("cannot grow a tree on zero instances")
    m = len(dataset.classes)

    def build(r: np.ndarray) -> TreeNode:
        hist = np.bincount(dataset.y[r], minlength=m)
        node = TreeNode(hist, r)
        if (hist > 0).sum() <= 1 or len(r) < 2 * min_obj:
            return node
        cand = best_split(dataset, r, min_obj)
        if cand is None:
            return node
        node.attribute, node.threshold = cand.attribute, cand.threshold
        node.children = [(t, build(sub)) for t, sub in _partition(dataset, r, cand)]
        return node

    return build(rows)


def pessimistic_errors(n: float, e: float, cf: float = 0.25) -> float:
    """``n`` times the upper ``cf`` confidence bound on the binomial error rate."""
    if n <= 0:
        return 0.0
    if e >= n:
        return float(n)
    return float(n * beta.ppf(1.0 - cf, e + 1, n - e))


def subtree_errors(node: TreeNode, cf: float = 0.25) -> float:
    if node.is_leaf:
        return pessimistic_errors(len(node.rows), node.errors, cf)
    return sum(subtree_errors(c, cf) for _, c in node.children)


def prune(node: TreeNode, cf: float = 0.25) -> TreeNode:
    """Collapse subtrees whose pessimistic error is no better than a leaf's (in place)."""
    if node.is_leaf:
        return node
    for _, child in node.children:
        prune(child, cf)
    as_leaf = pessimistic_errors(len(node.rows), node.errors, cf)
    if as_leaf <= subtree_errors(node, cf) + 1e-9:
        node.children = []
        node.attribute = node.threshold = None
    return node


def predict_row(node: TreeNode, values: Sequence) -> int:
    """Class index for one instance's value tuple."""
    while not node.is_leaf:
        value = values[node.attribute]
        nxt = None
        for test, child in node.children:
            if test.matches(value):
                nxt = child
                break
        if nxt is None:
            break
        node = nxt
    return node.prediction


def signature(node: TreeNode, dataset: Dataset) -> str:
    """Canonical pre-order serialization, leaf labels included."""
    names = [a.name for a in dataset.attributes]
    if node.is_leaf:
        return dataset.classes[node.prediction]
    inner = ";".join(f"{t.to_text(names)}:{signature(c, dataset)}" for t, c in node.children)
    return "[" + inner + "]"

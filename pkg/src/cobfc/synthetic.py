"""Seeded two-dimensional datasets used by the tests and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .data import NOMINAL, NUMERIC, Attribute, Dataset, Instance

CIRCLE, PLUS = "o", "+"


def from_points(points, labels, classes=(CIRCLE, PLUS), relation="synthetic") -> Dataset:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    attrs = tuple(Attribute(f"x{j}", NUMERIC, (), j) for j in range(points.shape[1]))
    cls = Attribute("class", NOMINAL, tuple(classes), len(attrs))
    rows = tuple(Instance(i, tuple(float(v) for v in p), str(lab))
                 for i, (p, lab) in enumerate(zip(points, labels)))
    return Dataset(attrs, cls, rows, relation)


def two_blobs(seed: int = 0, n: int = 100, separation: float = 10.0, std: float = 1.0) -> Dataset:
    """One isotropic Gaussian blob per class, far apart."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, std, size=(n, 2))
    b = rng.normal(0.0, std, size=(n, 2)) + separation
    return from_points(np.vstack([a, b]), [CIRCLE] * n + [PLUS] * n, relation="two_blobs")


def planted_blobs(seed: int = 0, n: int = 100, planted: int = 3) -> Dataset:
    """Two class blobs plus ``planted`` cross-class outliers.

    The planted instances are labelled with one class but sit inside the
    other class's blob; they are the last ``planted`` rows.
    """
    rng = np.random.default_rng(seed)
    circle = rng.normal((0.0, 0.0), 1.0, size=(n, 2))
    plus = rng.normal((8.0, 8.0), 1.0, size=(n, 2))
    # alternate: '+' inside the 'o' blob, 'o' inside the '+' blob
    spots = []
    labels = []
    for p in range(planted):
        angle = 2 * np.pi * p / max(planted, 1)
        offset = 0.9 * np.array([np.cos(angle), np.sin(angle)])
        if p % 2 == 0:
            spots.append(offset)
            labels.append(PLUS)
        else:
            spots.append(np.array([8.0, 8.0]) + offset)
            labels.append(CIRCLE)
    pts = np.vstack([circle, plus, np.array(spots).reshape(-1, 2)])
    return from_points(pts, [CIRCLE] * n + [PLUS] * n + labels, relation="planted_blobs")


def xor_blobs(seed: int = 0, n: int = 400, std: float = 0.6) -> Dataset:
    """Four blobs at the corners of a square with XOR labels; not linearly separable."""
    rng = np.random.default_rng(seed)
    centers = np.array([(0.0, 0.0), (2.0, 2.0), (0.0, 2.0), (2.0, 0.0)])
    labels_by_center = [CIRCLE, CIRCLE, PLUS, PLUS]
    per = n // 4
    pts, labels = [], []
    for c, lab in zip(centers, labels_by_center):
        pts.append(rng.normal(c, std, size=(per, 2)))
        labels += [lab] * per
    return from_points(np.vstack(pts), labels, relation="xor_blobs")


def suite(seed: int = 0) -> dict[str, Dataset]:
    return {"planted_blobs": planted_blobs(seed), "two_blobs": two_blobs(seed), "xor_blobs": xor_blobs(seed)}

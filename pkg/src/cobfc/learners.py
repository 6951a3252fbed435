"""Evaluation classifiers: naive Bayes and a pruned C4.5-style tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tree
from .data import Dataset, Instance
from .tree import TreeNode

VAR_FLOOR = 1e-9
CONFIDENCE = 0.25
MIN_OBJ = 2


@dataclass(frozen=True)
class NaiveBayesModel:
    classes: tuple[str, ...]
    priors: np.ndarray
    # numeric attributes: (attr index, means per class, variances per class, known per class)
    gaussians: tuple
    # nominal attributes: (attr index, class x value smoothed probabilities)
    tables: tuple
    schema: Dataset | None = None

    def predict_one(self, instance: Instance) -> str:
        row = Dataset(self.schema.attributes, self.schema.class_attribute, (instance,))
        return self.classes[int(self.predict(row)[0])]

    def log_joint(self, dataset: Dataset) -> np.ndarray:
        """n x classes matrix of log prior + summed log likelihoods."""
        with np.errstate(divide="ignore"):
            out = np.tile(np.log(self.priors), (len(dataset), 1))
        for a, mean, var, known in self.gaussians:
            x = dataset.numeric[:, a][:, None]
            ll = -0.5 * np.log(2 * np.pi * var)[None, :] - (x - mean[None, :]) ** 2 / (2 * var[None, :])
            # classes without any known value for this attribute contribute nothing
            ll = np.where(known[None, :], ll, 0.0)
            out += np.where(np.isnan(x), 0.0, ll)
        for a, probs in self.tables:
            codes = dataset.codes[:, a]
            ok = codes >= 0
            out[ok] += np.log(probs[:, codes[ok]]).T
        return out

    def posteriors(self, dataset: Dataset) -> np.ndarray:
        lj = self.log_joint(dataset)
        top = lj.max(axis=1, keepdims=True)
        p = np.exp(lj - top)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, dataset: Dataset) -> np.ndarray:
        # argmax returns the first maximum, i.e. ties go to class order
        return np.argmax(self.log_joint(dataset), axis=1)


def train_nb(train: Dataset) -> NaiveBayesModel:
    """Gaussian likelihoods for numeric attributes, add-one smoothed frequencies for nominal ones."""
    m = len(train.classes)
    counts = train.class_counts().astype(float)
    priors = counts / counts.sum()
    y = train.y
    gaussians, tables = [], []
    for a, attr in enumerate(train.attributes):
        if attr.is_numeric:
            col = train.numeric[:, a]
            means, variances, known = np.zeros(m), np.ones(m), np.zeros(m, dtype=bool)
            for c in range(m):
                v = col[(y == c) & ~np.isnan(col)]
                if len(v):
                    known[c] = True
                    means[c] = v.mean()
                    variances[c] = max(v.var(), VAR_FLOOR)
            gaussians.append((a, means, variances, known))
        else:
            k = len(attr.values)
            codes = train.codes[:, a]
            freq = np.zeros((m, k))
            ok = codes >= 0
            np.add.at(freq, (y[ok], codes[ok]), 1.0)
            probs = (freq + 1.0) / (freq.sum(axis=1, keepdims=True) + k)
            tables.append((a, probs))
    return NaiveBayesModel(train.classes, priors, tuple(gaussians), tuple(tables),
                           train.subset([]))


def predict_nb(model: NaiveBayesModel, instance: Instance) -> str:
    return model.predict_one(instance)


@dataclass
class PrunedTreeModel:
    root: TreeNode
    classes: tuple[str, ...]

    def predict(self, dataset: Dataset) -> np.ndarray:
        return np.array([tree.predict_row(self.root, inst.values) for inst in dataset.instances],
                        dtype=np.int64)

    def predict_one(self, instance: Instance) -> str:
        return self.classes[tree.predict_row(self.root, instance.values)]


def train_tree(train: Dataset, confidence: float = CONFIDENCE, min_obj: int = MIN_OBJ,
               pruned: bool = True) -> PrunedTreeModel:
    root = tree.grow(train, min_obj=min_obj)
    if pruned:
        tree.prune(root, confidence)
    return PrunedTreeModel(root, train.classes)


def predict_tree(model: PrunedTreeModel, instance: Instance) -> str:
    return model.predict_one(instance)


LEARNERS = {"nb": train_nb, "tree": train_tree}


def accuracy(model, dataset: Dataset) -> float:
    """Percentage of correctly classified instances."""
    if len(dataset) == 0:
        return 0.0
    return float(100.0 * np.mean(model.predict(dataset) == dataset.y))

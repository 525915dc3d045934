"""Random-forest binary classifier (CART trees, Gini splits, bootstrap, OOB).

Defaults: 100 trees, ``max_features = floor(sqrt(d))``, unlimited depth,
``min_samples_split=2``, ``min_samples_leaf=1``, bootstrap on, OOB error on.
Each tree's seed is a stable hash of ``(seed, "tree", index)``; bootstrap
draws and per-node feature draws depend only on that seed, so the forest is
reproducible regardless of build order or kernel backend.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyTrainingSet
from .kernels import build_tree, forest_predict, tree_predict
from .seeding import derive_seed


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: object = "sqrt"
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    bootstrap: bool = True
    compute_oob: bool = True
    seed: int = 0

    def resolve_max_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            m = max(1, int(math.isqrt(d)))
        elif self.max_features is None:
            m = d
        else:
            m = int(self.max_features)
        if not 1 <= m <= d:
            raise ConfigError(f"max_features={self.max_features!r} invalid for {d} features")
        return m

    def with_seed(self, seed: int) -> "ForestParams":
        return ForestParams(**{**asdict(self), "seed": seed})


@dataclass(eq=False)
class ForestModel:
    params: ForestParams
    n_features: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray
    roots: np.ndarray
    oob_error: float | None = None

    @property
    def n_trees(self) -> int:
        return len(self.roots)

    @property
    def leaf_p(self) -> np.ndarray:
        total = self.count0 + self.count1
        return np.where(total > 0, self.count1 / np.maximum(total, 1), 0.0)

    def tree_nodes(self, t: int) -> range:
        end = self.roots[t + 1] if t + 1 < len(self.roots) else len(self.feature)
        return range(int(self.roots[t]), int(end))

    def to_json(self) -> str:
        trees = []
        for t in range(self.n_trees):
            base = int(self.roots[t])
            nodes = []
            for i in self.tree_nodes(t):
                if self.feature[i] < 0:
                    nodes.append({"leaf": [int(self.count0[i]), int(self.count1[i])]})
                else:
                    nodes.append({"feature": int(self.feature[i]),
                                  "threshold": float(self.threshold[i]),
                                  "children": [int(self.left[i]) - base, int(self.right[i]) - base],
                                  "counts": [int(self.count0[i]), int(self.count1[i])]})
            trees.append(nodes)
        return json.dumps({"params": asdict(self.params), "n_features": self.n_features,
                           "oob_error": self.oob_error, "trees": trees})


def tree_seed(seed: int, t: int) -> int:
    return derive_seed(seed, "tree", t)


def fit(X, y, params: ForestParams = ForestParams()) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("forest needs at least one training row")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch("X and y disagree in length")
    n, d = X.shape
    m = params.resolve_max_features(d)
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)

    parts, roots, oob_masks = [], [], []
    offset = 0
    for t in range(params.n_trees):
        ts = tree_seed(params.seed, t)
        if params.bootstrap:
            draws = np.random.default_rng(ts).integers(0, n, n)
            counts = np.bincount(draws, minlength=n).astype(np.int64)
        else:
            counts = np.ones(n, dtype=np.int64)
        tree = build_tree(X, y, counts, order, m, max_depth, params.min_samples_split,
                          params.min_samples_leaf, np.uint64(ts))
        feat, thr, lft, rgt, c0, c1 = tree
        lft = np.where(lft >= 0, lft + offset, -1)
        rgt = np.where(rgt >= 0, rgt + offset, -1)
        parts.append((feat, thr, lft, rgt, c0, c1))
        roots.append(offset)
        offset += len(feat)
        oob_masks.append(counts == 0)

    cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    model = ForestModel(params, d, *cols, roots=np.asarray(roots, dtype=np.int64))
    if params.compute_oob and params.bootstrap:
        model.oob_error = _oob_error(model, X, y, oob_masks)
    return model


def _oob_error(model, X, y, oob_masks):
    n = X.shape[0]
    acc = np.zeros(n)
    hits = np.zeros(n, dtype=np.int64)
    leaf_p = model.leaf_p
    for t, mask in enumerate(oob_masks):
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            continue
        acc[rows] += tree_predict(X[rows], model.feature, model.threshold, model.left,
                                  model.right, leaf_p, model.roots[t])
        hits[rows] += 1
    if (hits == 0).any():
        return None
    pred = (acc / hits) >= 0.5
    return float(np.mean(pred != (y == 1)))


def predict_proba(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} columns, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.zeros(0)
    return forest_predict(X, model.feature, model.threshold, model.left, model.right,
                          model.leaf_p, model.roots)


def predict(model: ForestModel, X, threshold: float = 0.5) -> np.ndarray:
    return (predict_proba(model, X) >= threshold).astype(np.int8)

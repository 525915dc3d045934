"""k-means++ sub-domain clustering of target features.

Columns are z-scored with statistics of the fitting set before clustering;
the scaler travels with the model and is reapplied by :func:`assign`.
Centroids and inertia live in the scaled space.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, KTooLarge
from .kernels import nearest_centroid
from .seeding import derive_seed

DEFAULT_K_GRID = (1, 2, 3, 5, 10)


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    seed: int
    inertia: float
    restarts: int
    scaler_mean: np.ndarray
    scaler_scale: np.ndarray
    n_iter: int = 0
    inertia_history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.centroids.shape[1]

    @property
    def centers(self) -> np.ndarray:
        """Centroids in the original (unscaled) feature units."""
        return self.centroids * self.scaler_scale + self.scaler_mean

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} columns, got shape {X.shape}")
        return np.ascontiguousarray((X - self.scaler_mean) / self.scaler_scale)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "inertia": self.inertia,
            "restarts": self.restarts,
            "n_iter": self.n_iter,
            "scaler_mean": self.scaler_mean.tolist(),
            "scaler_scale": self.scaler_scale.tolist(),
            "centroids": self.centroids.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "KMeansModel":
        return cls(int(d["k"]), np.asarray(d["centroids"], dtype=np.float64), int(d["seed"]),
                   float(d["inertia"]), int(d["restarts"]), np.asarray(d["scaler_mean"]),
                   np.asarray(d["scaler_scale"]), int(d.get("n_iter", 0)))


def _plusplus_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    _, d2 = nearest_centroid(X, centers[:1])
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            raise DegenerateInput(f"fewer than {k} distinct rows")
        i = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
        i = min(i, n - 1)
        while d2[i] == 0.0:  # guard against landing on a zero-mass row through rounding
            i = (i + 1) % n
        centers[c] = X[i]
        _, dc = nearest_centroid(X, centers[c: c + 1])
        np.minimum(d2, dc, out=d2)
    return centers


def _lloyd(X, centers, max_iter, tol_abs):
    k = centers.shape[0]
    history = []
    labels, d2 = nearest_centroid(X, centers)
    inertia = float(d2.sum())
    history.append(inertia)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        counts = np.bincount(labels, minlength=k)
        new = np.empty_like(centers)
        for j in range(X.shape[1]):
            new[:, j] = np.bincount(labels, weights=X[:, j], minlength=k)
        nonempty = counts > 0
        new[nonempty] /= counts[nonempty, None]
        if not nonempty.all():
            # empty-cluster repair: move each empty centroid onto the farthest point
            far = np.argsort(-d2, kind="stable")
            used = 0
            for c in np.flatnonzero(~nonempty):
                new[c] = X[far[used]]
                used += 1
        shift = float(((new - centers) ** 2).sum())
        centers = new
        labels, d2 = nearest_centroid(X, centers)
        new_inertia = float(d2.sum())
        assert new_inertia <= inertia * (1 + 1e-12) + 1e-12, "Lloyd step increased inertia"
        inertia = new_inertia
        history.append(inertia)
        if shift <= tol_abs:
            break
    return centers, inertia, n_iter, history


def kmeanspp_fit(X, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 300,
                 tol: float = 1e-6, scale: bool = True) -> KMeansModel:
    """Best-of-``restarts`` k-means++ / Lloyd fit.

    Lloyd stops once the summed squared centroid movement drops below
    ``tol`` times the mean per-column variance, or after ``max_iter`` steps.
    Ties in inertia go to the lowest restart index.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DegenerateInput("need a non-empty 2-D feature matrix")
    n = X.shape[0]
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} must lie in [1, {n}]")
    if scale:
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
    else:
        mean = np.zeros(X.shape[1])
        sd = np.ones(X.shape[1])
    Xs = np.ascontiguousarray((X - mean) / sd)
    if k > 1 and np.unique(Xs, axis=0).shape[0] < k:
        raise DegenerateInput(f"fewer than {k} distinct rows")
    tol_abs = tol * float(Xs.var(axis=0).mean())

    best = None
    for r in range(restarts):
        rng = np.random.default_rng(derive_seed(seed, "kmeans-restart", r))
        centers = _plusplus_init(Xs, k, rng)
        centers, inertia, n_iter, history = _lloyd(Xs, centers, max_iter, tol_abs)
        if best is None or inertia < best[1]:
            best = (centers, inertia, n_iter, history)
    centers, inertia, n_iter, history = best
    return KMeansModel(k, centers, seed, inertia, restarts, mean, sd, n_iter, history)


def assign(model: KMeansModel, X) -> np.ndarray:
    """Nearest-centroid labels; ties go to the lowest centroid index."""
    labels, _ = nearest_centroid(model.transform(X), model.centroids)
    return labels

"""CORAL: second-order (and first-order) alignment of source features to target.

``A = Cs^(-1/2) @ Ct^(1/2)`` with ``Cs = cov(Xs) + lam*I`` and
``Ct = cov(Xt) + lam*I`` (n - 1 denominators). Applying the transform
centres rows on the source mean, multiplies by ``A`` and re-centres on the
target mean, so both covariance and mean match the target.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientRows

EIG_FLOOR = 1e-12
DEFAULT_LAMBDA = 1.0


def sym_power(C, power: float) -> np.ndarray:
    """``C**power`` for a symmetric PSD matrix, eigenvalues clamped at ``EIG_FLOOR``."""
    C = np.asarray(C, dtype=np.float64)
    vals, vecs = np.linalg.eigh((C + C.T) / 2.0)
    vals = np.maximum(vals, EIG_FLOOR)
    return (vecs * vals ** power) @ vecs.T


def _cov(X) -> np.ndarray:
    if X.shape[0] < 2:
        return np.zeros((X.shape[1], X.shape[1]))
    return np.cov(X, rowvar=False, ddof=1).reshape(X.shape[1], X.shape[1])


@dataclass
class CoralTransform:
    matrix: np.ndarray
    lam: float
    source_mean: np.ndarray
    target_mean: np.ndarray
    fitted_on: tuple = (0, 0)

    @classmethod
    def identity(cls, d: int) -> "CoralTransform":
        return cls(np.eye(d), 0.0, np.zeros(d), np.zeros(d))

    @property
    def n_features(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "A": self.matrix.ravel().tolist(),
            "d": self.n_features,
            "lambda": self.lam,
            "source_mean": self.source_mean.tolist(),
            "target_mean": self.target_mean.tolist(),
            "fitted_on": list(self.fitted_on),
        })

    @classmethod
    def from_json(cls, text: str) -> "CoralTransform":
        d = json.loads(text)
        k = int(d["d"])
        return cls(np.asarray(d["A"]).reshape(k, k), float(d["lambda"]),
                   np.asarray(d["source_mean"]), np.asarray(d["target_mean"]), tuple(d["fitted_on"]))


def fit_coral(Xs, Xt, lam: float = DEFAULT_LAMBDA, align_means: bool = True) -> CoralTransform:
    Xs = np.asarray(Xs, dtype=np.float64)
    Xt = np.asarray(Xt, dtype=np.float64)
    if Xs.ndim != 2 or Xt.ndim != 2 or Xs.shape[1] != Xt.shape[1]:
        raise DimensionMismatch(f"source {Xs.shape} and target {Xt.shape} disagree")
    if Xs.shape[0] < 1 or Xt.shape[0] < 1:
        raise InsufficientRows("CORAL needs at least one row on each side")
    if lam == 0 and (Xs.shape[0] < 2 or Xt.shape[0] < 2):
        raise InsufficientRows("CORAL without regularisation needs >= 2 rows per side")
    d = Xs.shape[1]
    Cs = _cov(Xs) + lam * np.eye(d)
    Ct = _cov(Xt) + lam * np.eye(d)
    A = sym_power(Cs, -0.5) @ sym_power(Ct, 0.5)
    if align_means:
        mu_s, mu_t = Xs.mean(axis=0), Xt.mean(axis=0)
    else:
        mu_s = mu_t = np.zeros(d)
    return CoralTransform(A, float(lam), mu_s, mu_t, (Xs.shape[0], Xt.shape[0]))


def apply(transform: CoralTransform, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != transform.n_features:
        raise DimensionMismatch(f"expected {transform.n_features} columns, got shape {X.shape}")
    return (X - transform.source_mean) @ transform.matrix + transform.target_mean

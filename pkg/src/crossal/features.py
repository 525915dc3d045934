"""Per-point window features.

Every point gets one 24-dimensional row computed from the trailing window of
``w`` values ending at that point. The first ``w - 1`` windows of a series are
left-padded with its first value, so rows stay 1:1 with points and no row ever
looks at later values.

The built-in set (column ``fNN`` is entry ``NN - 1`` of ``FEATURE_NAMES``):

==  =======================  ===================================================
 #  name                     definition on the window ``x``
==  =======================  ===================================================
01  mean                     arithmetic mean
02  std                      population standard deviation
03  min                      minimum
04  max                      maximum
05  skewness                 third central moment / std**3
06  kurtosis                 excess kurtosis, fourth central moment / std**4 - 3
07  acf_lag1                 Pearson correlation of ``x[:-1]`` and ``x[1:]``
08  acf_lag2                 same at lag 2
09  acf_lag3                 same at lag 3
10  acf_first_zero           first lag k >= 1 whose autocovariance is <= 0 (w if none)
11  mean_crossings           sign changes of ``x > mean`` between neighbours
12  longest_run_above_mean   longest stretch with ``x > mean``
13  longest_run_below_mean   longest stretch with ``x < mean``
14  trend_slope              least-squares slope against position
15  trend_residual_std       population std of the residuals of that fit
16  frac_diff_positive       share of successive differences > 0
17  mean_abs_diff            mean absolute successive difference
18  max_abs_diff             max absolute successive difference
19  p10                      10th percentile (linear interpolation)
20  p90                      90th percentile
21  iqr                      75th minus 25th percentile
22  spectral_centroid        power-weighted mean frequency of the periodogram, DC excluded
23  low_freq_power_frac      share of periodogram power below a quarter of Nyquist
24  histogram_entropy        Shannon entropy (nats) of a 10-bin histogram over [min, max]
==  =======================  ===================================================

A constant window yields 0 for every feature except mean, min, max, p10 and
p90.

Behaviour under ``x -> a * x + b`` with ``a > 0``: mean, min, max, p10 and p90
map the same way; std, trend_slope, trend_residual_std, mean_abs_diff,
max_abs_diff and iqr scale by ``a``; every other feature is unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ColumnCountMismatch, NonBinaryLabel, NonFiniteValue, WindowTooSmall
from .ingest import PointRef, TimeSeries
from .kernels import FEATURE_NAMES, N_FEATURES, window_features

DEFAULT_WINDOW = 32
MIN_WINDOW = 8
COLUMNS = tuple(f"f{i + 1:02d}" for i in range(N_FEATURES))

LOCATION_FEATURES = ("mean", "min", "max", "p10", "p90")
SCALE_FEATURES = ("std", "trend_slope", "trend_residual_std", "mean_abs_diff", "max_abs_diff", "iqr")
INVARIANT_FEATURES = tuple(
    n for n in FEATURE_NAMES if n not in LOCATION_FEATURES and n not in SCALE_FEATURES
)


@dataclass(eq=False)
class FeatureMatrix:
    series_ids: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    labels: np.ndarray
    window_length: int = DEFAULT_WINDOW
    columns: tuple = COLUMNS

    def __post_init__(self):
        self.series_ids = np.asarray(self.series_ids, dtype=str)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        n = self.data.shape[0]
        if not (len(self.series_ids) == len(self.indices) == len(self.labels) == n):
            raise ValueError("refs, labels and data rows must align")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")

    def __len__(self):
        return self.data.shape[0]

    @property
    def refs(self) -> list[PointRef]:
        return [PointRef(s, int(i)) for s, i in zip(self.series_ids.tolist(), self.indices.tolist())]

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows)
        return FeatureMatrix(self.series_ids[rows], self.indices[rows], self.data[rows],
                             self.labels[rows], self.window_length, self.columns)

    @classmethod
    def concat(cls, parts) -> "FeatureMatrix":
        parts = list(parts)
        if not parts:
            return cls(np.empty(0, dtype=str), np.empty(0), np.empty((0, N_FEATURES)), np.empty(0))
        return cls(np.concatenate([p.series_ids for p in parts]),
                   np.concatenate([p.indices for p in parts]),
                   np.concatenate([p.data for p in parts]),
                   np.concatenate([p.labels for p in parts]),
                   parts[0].window_length, parts[0].columns)


def extract(series: TimeSeries, window_length: int = DEFAULT_WINDOW) -> FeatureMatrix:
    if window_length < MIN_WINDOW:
        raise WindowTooSmall(f"window length must be >= {MIN_WINDOW}, got {window_length}")
    data = window_features(np.ascontiguousarray(series.values, dtype=np.float64), int(window_length))
    n = len(series)
    return FeatureMatrix(np.full(n, series.key), np.arange(n), data, series.labels, window_length)


def extract_many(series_list, window_length: int = DEFAULT_WINDOW) -> FeatureMatrix:
    return FeatureMatrix.concat(extract(s, window_length) for s in series_list)


def write_features(fm: FeatureMatrix, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(fm.data, columns=list(COLUMNS))
    frame.insert(0, "label", fm.labels.astype(int))
    frame.insert(0, "index", fm.indices)
    frame.insert(0, "series_id", fm.series_ids)
    frame.to_csv(path, index=False, float_format="%.17g")


def load_precomputed(path, window_length: int = DEFAULT_WINDOW) -> FeatureMatrix:
    """Read a feature CSV (``series_id,index,label`` + 24 feature columns)."""
    frame = pd.read_csv(path, dtype={"series_id": str}, float_precision="round_trip")
    ref_cols = ["series_id", "index", "label"]
    missing = [c for c in ref_cols if c not in frame.columns]
    if missing:
        raise ColumnCountMismatch(f"{path}: missing reference columns {missing}")
    feat_cols = [c for c in frame.columns if c not in ref_cols]
    if len(feat_cols) != N_FEATURES:
        raise ColumnCountMismatch(f"{path}: expected {N_FEATURES} feature columns, found {len(feat_cols)}")
    data = frame[feat_cols].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(data)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFiniteValue(int(r) + 1, feat_cols[c])
    labels = frame["label"].to_numpy()
    if not np.isin(labels, (0, 1)).all():
        r = int(np.flatnonzero(~np.isin(labels, (0, 1)))[0]) + 1
        raise NonBinaryLabel(r, f"{path}: label column")
    return FeatureMatrix(frame["series_id"].to_numpy(dtype=str), frame["index"].to_numpy(),
                         data, labels, window_length, tuple(feat_cols))


def feature_index(name: str) -> int:
    return FEATURE_NAMES.index(name)


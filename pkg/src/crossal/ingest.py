"""Dataset loading, validation and "Non-X -> X" transfer-pair construction.

On disk a catalog is ``<root>/<dataset_id>/<series_id>.csv`` where every file
has the header ``timestamp,value,is_anomaly``. Adapters for the NAB and Yahoo
layouts convert into that schema (see :func:`convert_nab`,
:func:`convert_yahoo`).
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DecreasingTimestamp,
    EmptyInput,
    EmptySource,
    MissingColumn,
    NonBinaryLabel,
    NonNumericValue,
    UnknownDataset,
)
from .seeding import derive_seed

log = logging.getLogger(__name__)

COLUMNS = ("timestamp", "value", "is_anomaly")

# large source datasets are subsampled when they sit on the source side
DEFAULT_SOURCE_SAMPLING = {"IOPS": 0.05}


class PointRef(NamedTuple):
    """One point of one series. ``series_id`` is the qualified ``dataset/series`` key."""

    series_id: str
    index: int


@dataclass(eq=False)
class TimeSeries:
    dataset_id: str
    series_id: str
    timestamps: np.ndarray
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        n = len(self.values)
        if n < 1:
            raise EmptyInput(f"series {self.key!r} has no points")
        if len(self.timestamps) != n or len(self.labels) != n:
            raise ValueError("timestamps, values and labels must have equal length")

    @property
    def key(self) -> str:
        return f"{self.dataset_id}/{self.series_id}"

    def __len__(self):
        return len(self.values)

    @property
    def anomaly_fraction(self) -> float:
        return float(self.labels.mean())

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (self.dataset_id == other.dataset_id
                and self.series_id == other.series_id
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.labels, other.labels))


@dataclass
class DatasetCatalog:
    datasets: dict[str, list[TimeSeries]] = field(default_factory=dict)

    def __contains__(self, dataset_id):
        return dataset_id in self.datasets

    def __getitem__(self, dataset_id) -> list[TimeSeries]:
        return self.datasets[dataset_id]

    @property
    def dataset_ids(self) -> list[str]:
        return sorted(self.datasets)

    def summary(self) -> dict[str, dict]:
        out = {}
        for ds in self.dataset_ids:
            series = self.datasets[ds]
            n_points = sum(len(s) for s in series)
            n_anom = sum(int(s.labels.sum()) for s in series)
            out[ds] = {
                "n_points": n_points,
                "anomaly_fraction": n_anom / n_points if n_points else 0.0,
                "n_series": len(series),
                "mean_length": n_points / len(series) if series else 0.0,
            }
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


@dataclass
class TransferPair:
    """Target dataset plus the merged, optionally subsampled, source datasets.

    Subsampling keeps whole series (window features need contiguous values);
    ``source_points`` lists, per source series key, the point indices that
    belong to the source sample.
    """

    target_id: str
    target: list[TimeSeries]
    source: list[TimeSeries]
    source_sampling: dict[str, float]
    source_points: dict[str, np.ndarray]


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def _first_bad(mask) -> int:
    # 1-based data row (the header is not counted)
    return int(np.flatnonzero(mask)[0]) + 1


def parse_series(path, dataset_id: str, series_id: str | None = None) -> TimeSeries:
    path = Path(path)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = [c.strip() for c in frame.columns]
    for col in COLUMNS:
        if col not in frame.columns:
            raise MissingColumn(col)
    if len(frame) == 0:
        raise EmptyInput(f"{path}: no data rows")

    raw_labels = frame["is_anomaly"].str.strip()
    lab = pd.to_numeric(raw_labels, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isin(lab, (0.0, 1.0))
    if bad.any():
        row = _first_bad(bad)
        raise NonBinaryLabel(row, f"{path.name}: label {raw_labels.iloc[row - 1]!r}")

    val = pd.to_numeric(frame["value"].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(val)
    if bad.any():
        row = _first_bad(bad)
        raise NonNumericValue(row, f"{path.name}: value {frame['value'].iloc[row - 1]!r}")
    # to_numeric's fast parser is not correctly rounded; re-parse exactly for round-trips
    val = frame["value"].str.strip().to_numpy().astype(np.float64)

    ts = pd.to_numeric(frame["timestamp"].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(ts) | (ts != np.round(ts))
    if bad.any():
        row = _first_bad(bad)
        raise NonNumericValue(row, f"{path.name}: timestamp {frame['timestamp'].iloc[row - 1]!r}")
    ts = ts.astype(np.int64)
    dec = np.diff(ts) < 0
    if dec.any():
        raise DecreasingTimestamp(_first_bad(dec) + 1, path.name)

    return TimeSeries(dataset_id, series_id or path.stem, ts, val, lab.astype(np.int8))


def write_series(series: TimeSeries, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for t, v, y in zip(series.timestamps.tolist(), series.values.tolist(), series.labels.tolist()):
            fh.write(f"{t},{v!r},{y}\n")


def load_catalog(root, jobs: int = 1, datasets=None) -> DatasetCatalog:
    root = Path(root)
    if not root.is_dir():
        raise UnknownDataset(f"data root {root} is not a directory")
    jobs_list = []
    for ds_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if datasets is not None and ds_dir.name not in datasets:
            continue
        for f in sorted(ds_dir.glob("*.csv")):
            jobs_list.append((f, ds_dir.name))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parsed = list(pool.map(lambda a: parse_series(*a), jobs_list))
    else:
        parsed = [parse_series(f, ds) for f, ds in jobs_list]
    catalog = DatasetCatalog()
    for s in parsed:
        catalog.datasets.setdefault(s.dataset_id, []).append(s)
    return catalog


def write_catalog(catalog: DatasetCatalog, root) -> None:
    root = Path(root)
    for ds in catalog.dataset_ids:
        for s in catalog[ds]:
            write_series(s, root / ds / f"{s.series_id}.csv")


# ---------------------------------------------------------------------------
# sampling and transfer pairs
# ---------------------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_indices(labels, fraction: float, seed: int) -> np.ndarray:
    """Positions of a class-stratified sample, in ascending order.

    Each class keeps ``round_half_up(fraction * n_class)`` points; the larger
    class is then trimmed or padded so the total is
    ``round_half_up(fraction * n)``.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n == 0:
        raise EmptyInput("cannot sample from an empty set of points")
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"sampling fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    pos = [np.flatnonzero(labels == c) for c in (0, 1)]
    take = [_round_half_up(fraction * len(p)) for p in pos]
    total = _round_half_up(fraction * n)
    major = 0 if len(pos[0]) >= len(pos[1]) else 1
    take[major] = min(len(pos[major]), max(0, take[major] + total - sum(take)))
    chosen = [rng.choice(p, size=t, replace=False) for p, t in zip(pos, take)]
    return np.sort(np.concatenate(chosen))


def stratified_sample(points, fraction: float, seed: int) -> list:
    """Class-stratified subsample of ``(PointRef, label)`` pairs, order preserved."""
    points = list(points)
    if not points:
        raise EmptyInput("cannot sample from an empty set of points")
    labels = np.fromiter((lab for _, lab in points), dtype=np.int64, count=len(points))
    return [points[i] for i in stratified_indices(labels, fraction, seed)]


def build_transfer_pair(catalog: DatasetCatalog, target_id: str, source_sampling=None,
                        seed: int = 0) -> TransferPair:
    if target_id not in catalog:
        raise UnknownDataset(f"unknown dataset {target_id!r}; have {catalog.dataset_ids}")
    sampling = dict(DEFAULT_SOURCE_SAMPLING if source_sampling is None else source_sampling)
    for ds, frac in sampling.items():
        if not 0.0 < frac <= 1.0:
            raise ConfigError(f"source fraction for {ds!r} must lie in (0, 1], got {frac}")
    source_ids = [ds for ds in catalog.dataset_ids if ds != target_id]
    if not source_ids:
        raise EmptySource(f"catalog holds only the target {target_id!r}")

    source, points = [], {}
    for ds in source_ids:
        series = catalog[ds]
        frac = sampling.get(ds, 1.0)
        source.extend(series)
        if frac == 1.0:
            for s in series:
                points[s.key] = np.arange(len(s))
            continue
        labels = np.concatenate([s.labels for s in series])
        keep = stratified_indices(labels, frac, derive_seed(seed, "source-sample", ds))
        offsets = np.cumsum([0] + [len(s) for s in series])
        for s, lo, hi in zip(series, offsets[:-1], offsets[1:]):
            sel = keep[(keep >= lo) & (keep < hi)] - lo
            points[s.key] = sel
        log.info("source %s sampled at %.3f: %d of %d points", ds, frac, len(keep), len(labels))
    return TransferPair(target_id, list(catalog[target_id]), source,
                        {ds: sampling.get(ds, 1.0) for ds in source_ids}, points)


# ---------------------------------------------------------------------------
# converters
# ---------------------------------------------------------------------------

NAB_DATASETS = {"AWS": "realAWSCloudwatch", "Twitter": "realTweets"}


def convert_nab(nab_root, out_root, datasets=None, labels: str = "windows") -> list[Path]:
    """Convert a NAB checkout into the canonical catalog layout.

    ``labels="windows"`` marks every point inside a labelled anomaly window,
    ``labels="points"`` only the labelled timestamps.
    """
    nab_root, out_root = Path(nab_root), Path(out_root)
    datasets = datasets or NAB_DATASETS
    fname = "combined_windows.json" if labels == "windows" else "combined_labels.json"
    with open(nab_root / "labels" / fname, encoding="utf-8") as fh:
        windows = json.load(fh)
    written = []
    for ds, sub in datasets.items():
        for f in sorted((nab_root / "data" / sub).glob("*.csv")):
            frame = pd.read_csv(f)
            stamps = pd.to_datetime(frame["timestamp"])
            y = np.zeros(len(frame), dtype=np.int8)
            for item in windows.get(f"{sub}/{f.name}", []):
                if labels == "windows":
                    lo, hi = pd.to_datetime(item[0]), pd.to_datetime(item[1])
                    y[((stamps >= lo) & (stamps <= hi)).to_numpy()] = 1
                else:
                    y[(stamps == pd.to_datetime(item)).to_numpy()] = 1
            epoch = (stamps - pd.Timestamp("1970-01-01")) // pd.Timedelta("1s")
            ts = TimeSeries(ds, f.stem, epoch.to_numpy(), frame["value"].to_numpy(), y)
            dest = out_root / ds / f"{f.stem}.csv"
            write_series(ts, dest)
            written.append(dest)
    return written


def convert_yahoo(src_dir, out_root, dataset_id: str) -> list[Path]:
    """Convert one Yahoo S5 benchmark directory (A1..A4) to the canonical layout."""
    src_dir, out_root = Path(src_dir), Path(out_root)
    written = []
    for f in sorted(src_dir.glob("*.csv")):
        frame = pd.read_csv(f)
        tcol = "timestamp" if "timestamp" in frame.columns else "timestamps"
        lcol = "is_anomaly" if "is_anomaly" in frame.columns else "anomaly"
        if lcol not in frame.columns:
            continue  # summary files such as A3Benchmark_all.csv
        ts = TimeSeries(dataset_id, f.stem, frame[tcol].to_numpy(), frame["value"].to_numpy(),
                        frame[lcol].to_numpy())
        dest = out_root / dataset_id / f"{f.stem}.csv"
        write_series(ts, dest)
        written.append(dest)
    return written

"""Synthetic cross-domain series for tests, demos and the desk-scale benchmark.

A series alternates between two Gaussian AR(1) regimes. Anomalies are
contiguous injected segments (level shifts, variance bursts, spike trains),
every point of which is labelled 1. A "domain" is a pair of regimes plus an
anomaly-strength range; the source domain uses different regime means,
scales and lag structure than the target.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import DatasetCatalog, TimeSeries
from .seeding import derive_seed


@dataclass(frozen=True)
class Regime:
    mean: float
    std: float
    phi: float  # lag-1 AR coefficient


@dataclass(frozen=True)
class Domain:
    regimes: tuple
    anomaly_fraction: float = 0.03
    strength: tuple = (2.5, 5.0)  # anomaly magnitude range, in regime std units
    segment: tuple = (10, 40)  # anomaly segment length range
    dwell: tuple = (150, 400)  # regime dwell time range


TARGET_DOMAIN = Domain((Regime(0.0, 1.0, 0.6), Regime(6.0, 2.0, 0.2)), strength=(2.0, 4.0))
SOURCE_DOMAIN = Domain((Regime(40.0, 5.0, 0.85), Regime(25.0, 3.0, -0.3)), strength=(3.5, 7.0))


def _ar1(rng, n, reg: Regime, start):
    out = np.empty(n)
    x = start
    innov = reg.std * np.sqrt(1.0 - reg.phi ** 2)
    for t in range(n):
        x = reg.mean + reg.phi * (x - reg.mean) + innov * rng.standard_normal()
        out[t] = x
    return out


def make_series(rng, length: int, domain: Domain):
    """Return ``(values, labels)`` for one series of ``domain``."""
    values = np.empty(length)
    scale = np.empty(length)
    t = 0
    which = int(rng.integers(2))
    x = domain.regimes[which].mean
    while t < length:
        reg = domain.regimes[which]
        n = min(int(rng.integers(*domain.dwell)), length - t)
        values[t: t + n] = _ar1(rng, n, reg, x)
        scale[t: t + n] = reg.std
        x = values[t + n - 1]
        t += n
        which = 1 - which

    labels = np.zeros(length, dtype=np.int8)
    target = int(round(domain.anomaly_fraction * length))
    guard = 0
    while labels.sum() < target and guard < 10 * length:
        guard += 1
        seg = int(rng.integers(*domain.segment))
        seg = min(seg, target - int(labels.sum()))
        if seg <= 0:
            break
        start = int(rng.integers(32, max(33, length - seg)))
        if labels[max(0, start - 5): start + seg + 5].any():
            continue
        mag = rng.uniform(*domain.strength)
        sl = slice(start, start + seg)
        kind = rng.integers(3)
        if kind == 0:  # level shift
            values[sl] += rng.choice((-1.0, 1.0)) * mag * scale[sl]
        elif kind == 1:  # variance burst
            values[sl] += mag * scale[sl] * rng.standard_normal(seg)
        else:  # spike train
            spikes = np.zeros(seg)
            spikes[::3] = mag
            values[sl] += spikes * scale[sl]
        labels[sl] = 1
    return values, labels


def make_dataset(dataset_id: str, domain: Domain, n_series: int, length: int, seed: int) -> list[TimeSeries]:
    out = []
    for i in range(n_series):
        rng = np.random.default_rng(derive_seed(seed, "synthetic", dataset_id, i))
        values, labels = make_series(rng, length, domain)
        stamps = 1_600_000_000 + 300 * np.arange(length, dtype=np.int64)
        out.append(TimeSeries(dataset_id, f"series_{i:03d}", stamps, values, labels))
    return out


def make_cross_domain_catalog(seed: int = 0, target_series: int = 5, source_series: int = 4,
                              length: int = 1200, target_id: str = "target",
                              source_id: str = "source") -> DatasetCatalog:
    return DatasetCatalog({
        target_id: make_dataset(target_id, TARGET_DOMAIN, target_series, length, seed),
        source_id: make_dataset(source_id, SOURCE_DOMAIN, source_series, length, seed),
    })

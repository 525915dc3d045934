"""Experiment drivers: cluster x budget sweep, single-cluster rate analysis,
percentage budgets with a within-domain comparator, and the baseline."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, UnknownDataset
from ..evaluate import MetricsRow, aggregate_folds
from ..features import FeatureMatrix, extract_many, load_precomputed
from ..ingest import load_catalog
from .config import ExperimentConfig
from .pipeline import Budget, run_baseline_job, run_job, sample_source

log = logging.getLogger(__name__)


@dataclass
class ResultsTable:
    experiment: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    logs: dict = field(default_factory=dict)
    accounting: list = field(default_factory=list)
    baseline: list = field(default_factory=list)

    def sort(self) -> "ResultsTable":
        self.rows.sort(key=lambda r: (r.dataset, r.k, r.pct if r.pct is not None else -1.0, r.N, r.fold, r.round))
        self.baseline.sort(key=lambda r: (r.dataset, r.fold))
        self.accounting.sort(key=lambda a: (a["dataset"], a["k"], a["N"], a["budget"], a["fold"]))
        return self

    def summary(self) -> list[MetricsRow]:
        """Fold means per context, with final-round flags and gains over N=0."""
        if not self.rows:
            return []
        keys = ("dataset", "k", "round", "pct") if self.experiment == "exp3" else ("dataset", "k", "N", "round")
        agg = aggregate_folds(self.rows, keys)
        last = {}
        for r in agg:
            ck = (r.dataset, r.k, r.pct if self.experiment == "exp3" else r.N)
            last[ck] = max(last.get(ck, -1), r.round)
        start = {(r.dataset, r.k): r.f1 for r in agg if r.round == 0}
        for r in agg:
            ck = (r.dataset, r.k, r.pct if self.experiment == "exp3" else r.N)
            r.extra["final"] = r.round == last[ck]
            r.extra["delta_f1"] = r.f1 - start[(r.dataset, r.k)]
            r.extra["per_point_increase"] = (
                per_point_increase(start[(r.dataset, r.k)], r.f1, r.N)
                if r.extra["final"] else None)
        return agg

    def final(self) -> list[MetricsRow]:
        return [r for r in self.summary() if r.extra["final"]]


def per_point_increase(f1_before: float, f1_after: float, n_added: int):
    """ΔF1 per labelled point; ``None`` when nothing was added."""
    if not n_added:
        return None
    return (f1_after - f1_before) / n_added


def format_rate(value) -> str:
    return "" if value is None else f"{value:.5f}"


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

def load_features(cfg: ExperimentConfig) -> dict[str, FeatureMatrix]:
    if cfg.features_from:
        root = Path(cfg.features_from)
        files = sorted(root.glob("*.csv")) if root.is_dir() else [root]
        if not files:
            raise DataError(f"no feature CSVs under {root}")
        return {f.stem: load_precomputed(f, cfg.window) for f in files}
    catalog = load_catalog(cfg.data_root, jobs=cfg.jobs)
    if not catalog.datasets:
        raise DataError(f"no datasets under {cfg.data_root}")
    return {ds: extract_many(catalog[ds], cfg.window) for ds in catalog.dataset_ids}


def _targets(cfg, features, default_exclude=()):
    available = sorted(features)
    targets = list(cfg.targets) or available
    exclude = set(cfg.exclude) | set(default_exclude if not cfg.targets else ())
    targets = [t for t in targets if t not in exclude]
    for t in targets:
        if t not in features:
            raise UnknownDataset(f"unknown target {t!r}; have {available}")
    return targets


def _run_jobs(cfg, jobs):
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            futures = [pool.submit(fn, *args) for fn, args in jobs]
            return [f.result() for f in futures]
    return [fn(*args) for fn, args in jobs]


def _sweep(cfg: ExperimentConfig, experiment: str, k_grid, budgets, features=None,
           default_exclude=()) -> ResultsTable:
    features = features if features is not None else load_features(cfg)
    if len(features) < 2:
        raise DataError("transfer experiments need at least two datasets")
    table = ResultsTable(experiment, cfg)
    jobs = []
    for ds in _targets(cfg, features, default_exclude):
        source = sample_source(features, ds, cfg.source_sampling, cfg.seed)
        for k in k_grid:
            jobs.append((run_job, (cfg, ds, k, features[ds], source, budgets)))
    for res in _run_jobs(cfg, jobs):
        table.rows.extend(res.rows)
        table.logs.update(res.logs)
        table.accounting.extend(res.accounting)
    return table.sort()


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_exp1(cfg: ExperimentConfig, features=None) -> ResultsTable:
    budgets = [Budget(b) for b in sorted(set(cfg.budgets))]
    return _sweep(cfg, "exp1", cfg.k_grid, budgets, features)


def run_exp2(cfg: ExperimentConfig, features=None) -> ResultsTable:
    budgets = [Budget(b) for b in sorted(set(cfg.budgets))]
    return _sweep(cfg, "exp2", [1], budgets, features)


def rate_table(table: ResultsTable) -> list[dict]:
    """Per dataset and N: F1 before / after, difference, per-point increase."""
    out = []
    for r in table.final():
        if r.k != 1:
            continue
        before = r.f1 - r.extra["delta_f1"]  # the shared round-0 score
        out.append({
            "dataset": r.dataset, "N": r.N, "precision": r.precision, "recall": r.recall,
            "f1_before": before, "f1_after": r.f1, "difference": r.f1 - before,
            "per_point_increase": per_point_increase(before, r.f1, r.N),
        })
    return out


def run_exp3(cfg: ExperimentConfig, features=None) -> ResultsTable:
    features = features if features is not None else load_features(cfg)
    budgets = [Budget(float(p), is_pct=True) for p in sorted(set(cfg.pct_budgets))]
    table = _sweep(cfg, "exp3", [1], budgets, features, default_exclude=("IOPS",))
    targets = sorted({r.dataset for r in table.rows})
    table.baseline = _baseline_rows(cfg, features, targets)
    return table.sort()


def _baseline_rows(cfg, features, targets):
    jobs = [(run_baseline_job, (cfg, ds, features[ds])) for ds in targets]
    rows = []
    for res in _run_jobs(cfg, jobs):
        rows.extend(res)
    return rows


def run_baseline(cfg: ExperimentConfig, features=None) -> ResultsTable:
    features = features if features is not None else load_features(cfg)
    targets = _targets(cfg, features)
    table = ResultsTable("baseline", cfg)
    table.baseline = _baseline_rows(cfg, features, targets)
    table.rows = list(table.baseline)
    return table.sort()


RUNNERS = {"exp1": run_exp1, "exp2": run_exp2, "exp3": run_exp3, "baseline": run_baseline}


def baseline_means(rows) -> dict[str, MetricsRow]:
    if not rows:
        return {}
    return {r.dataset: r for r in aggregate_folds(rows, ("dataset",))}


def mean_final_f1(table: ResultsTable, dataset: str, k: int, n: int) -> float:
    rows = [r for r in table.final() if r.dataset == dataset and r.k == k and r.N == n]
    if not rows:
        raise KeyError((dataset, k, n))
    return float(np.mean([r.f1 for r in rows]))

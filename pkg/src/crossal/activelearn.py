"""Pool-based acquisition: certainty ranking, context-diversity filter, and the
budgeted select -> label -> retrain loop.
"""
from __future__ import annotations

import bisect
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, OutOfRange
from .forest import ForestModel, predict_proba
from .ingest import PointRef

log = logging.getLogger(__name__)

TARGET_TRAIN = "target_train"


def certainty(p_anom):
    """``|P(norm) - P(anom)| = |1 - 2p|``; 0 is maximal uncertainty."""
    p = np.asarray(p_anom, dtype=np.float64)
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise OutOfRange(f"probability outside [0, 1]: {p_anom!r}")
    c = np.abs(1.0 - 2.0 * p)
    return float(c) if c.ndim == 0 else c


def rank_order(series_ids, indices, p_anom) -> np.ndarray:
    """Positions sorted by ascending certainty, then series id, then index."""
    return np.lexsort((np.asarray(indices), np.asarray(series_ids), certainty(np.asarray(p_anom))))


def rank_pool(pool: Sequence[tuple[PointRef, float]]) -> list[tuple[PointRef, float]]:
    if not pool:
        raise ValueError("rank_pool needs a non-empty pool")
    refs = [r for r, _ in pool]
    order = rank_order([r.series_id for r in refs], [r.index for r in refs], [p for _, p in pool])
    return [pool[i] for i in order]


class _Taken:
    """Selected indices per series, kept sorted for window lookups."""

    def __init__(self, refs=()):
        self._by_series: dict[str, list[int]] = {}
        for r in refs:
            self.add(r.series_id, r.index)

    def add(self, series_id, index):
        bisect.insort(self._by_series.setdefault(series_id, []), index)

    def blocked(self, series_id, index, alpha) -> bool:
        xs = self._by_series.get(series_id)
        if not xs:
            return False
        i = bisect.bisect_left(xs, index - alpha)
        # blocked iff some taken j satisfies |j - index| <= alpha
        return i < len(xs) and xs[i] <= index + alpha


def _select(series_ids, indices, m, alpha, taken: _Taken, fill_blocked=False) -> list[int]:
    chosen = []
    if m <= 0:
        return chosen
    skipped = []
    for pos, (s, i) in enumerate(zip(series_ids, indices)):
        if taken.blocked(s, i, alpha):
            skipped.append(pos)
            continue
        taken.add(s, i)
        chosen.append(pos)
        if len(chosen) == m:
            return chosen
    if fill_blocked:
        for pos in skipped[: m - len(chosen)]:
            taken.add(series_ids[pos], indices[pos])
            chosen.append(pos)
    return chosen


def select_batch(ranked, m: int, alpha: int, already_selected=(), fill_blocked: bool = False) -> list[PointRef]:
    """Walk ``ranked`` top-down, taking a point only if no earlier pick (this
    batch or ``already_selected``) in the same series lies within ``alpha``.

    With ``fill_blocked`` a short batch is topped up with the best-ranked
    blocked points; the default leaves it short.
    """
    if m < 0:
        raise ValueError("batch size must be >= 0")
    refs = [r[0] if isinstance(r, tuple) and not isinstance(r, PointRef) else r for r in ranked]
    pos = _select([r.series_id for r in refs], [r.index for r in refs], m, alpha,
                  _Taken(already_selected), fill_blocked)
    return [refs[p] for p in pos]


def round_budgets(total: int, rounds: int) -> list[int]:
    """Split ``total`` over ``rounds``; the remainder goes one per round from round 1."""
    base, rem = divmod(total, rounds)
    return [base + (1 if r < rem else 0) for r in range(rounds)]


@dataclass
class AcquisitionConfig:
    alpha: int = 10
    rounds: int = 5
    total_budget: int = 0
    budget_mode: str = "global"
    fill_blocked: bool = False

    def __post_init__(self):
        if self.alpha < 0 or self.rounds < 1 or self.total_budget < 0:
            raise ConfigError(f"invalid acquisition config {self}")
        if self.budget_mode not in ("global", "per_cluster"):
            raise ConfigError(f"budget_mode must be 'global' or 'per_cluster', got {self.budget_mode!r}")


@dataclass(frozen=True)
class Selection:
    round: int
    ref: PointRef
    cluster: int
    p_anom: float
    certainty: float


@dataclass
class SelectionLog:
    records: list[Selection] = field(default_factory=list)
    requested: list[int] = field(default_factory=list)
    exhausted: bool = False

    def round(self, r: int) -> list[Selection]:
        return [s for s in self.records if s.round == r]

    @property
    def selected(self) -> list[PointRef]:
        return [s.ref for s in self.records]

    def __len__(self):
        return len(self.records)

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "series_id", "index", "cluster", "p_anom", "certainty"])
            for s in self.records:
                w.writerow([s.round, s.ref.series_id, s.ref.index, s.cluster, repr(s.p_anom), repr(s.certainty)])


@dataclass
class Pool:
    """Unlabelled candidates of one cluster. Labels are deliberately absent."""

    series_ids: np.ndarray
    indices: np.ndarray
    X: np.ndarray
    provenance: np.ndarray

    def __len__(self):
        return len(self.indices)

    def drop(self, positions) -> "Pool":
        keep = np.ones(len(self), dtype=bool)
        keep[np.asarray(positions, dtype=np.int64)] = False
        return Pool(self.series_ids[keep], self.indices[keep], self.X[keep], self.provenance[keep])


@dataclass
class ALResult:
    models: list
    log: SelectionLog
    snapshots: list
    train_sizes: list


Oracle = Callable[[list[PointRef]], np.ndarray]
Refit = Callable[[np.ndarray, np.ndarray, int, int], ForestModel]


def _proba(model, X):
    if model is None:
        return np.zeros(X.shape[0])
    return predict_proba(model, X)


def run_active_learning(models: list, train_sets: list, pools: list[Pool],
                        config: AcquisitionConfig, oracle: Oracle, refit: Refit,
                        on_round: Callable | None = None) -> ALResult:
    """Run ``config.rounds`` acquisition rounds over per-cluster pools.

    ``models[c]`` may be ``None`` for a cluster without training data (it
    scores every candidate as normal). ``refit(X, y, cluster, round)`` builds
    the retrained model; ``on_round(round, models)`` runs after each round and
    its return values are collected in ``snapshots``.
    """
    models = list(models)
    train_sets = [(np.asarray(X), np.asarray(y)) for X, y in train_sets]
    pools = list(pools)
    log_ = SelectionLog()
    snapshots = []
    sizes = [sum(len(y) for _, y in train_sets)]
    if config.total_budget == 0:
        return ALResult(models, log_, snapshots, sizes)

    taken = _Taken()
    k = len(pools)
    for r, budget in enumerate(round_budgets(config.total_budget, config.rounds), start=1):
        if all(len(p) == 0 for p in pools):
            log_.exhausted = True
            log.warning("all pools exhausted before round %d; stopping early", r)
            break
        scores = [_proba(models[c], pools[c].X) for c in range(k)]
        picks: list[list[int]] = [[] for _ in range(k)]
        if config.budget_mode == "global":
            log_.requested.append(budget)
            cl = np.concatenate([np.full(len(p), c) for c, p in enumerate(pools)])
            local = np.concatenate([np.arange(len(p)) for p in pools])
            sids = np.concatenate([p.series_ids for p in pools])
            idxs = np.concatenate([p.indices for p in pools])
            ps = np.concatenate(scores)
            order = rank_order(sids, idxs, ps)
            chosen = _select(sids[order].tolist(), idxs[order].tolist(), budget, config.alpha,
                             taken, config.fill_blocked)
            for q in order[chosen]:
                picks[cl[q]].append(int(local[q]))
        else:
            log_.requested.append(budget * k)
            for c in range(k):
                if len(pools[c]) == 0:
                    continue
                order = rank_order(pools[c].series_ids, pools[c].indices, scores[c])
                chosen = _select(pools[c].series_ids[order].tolist(), pools[c].indices[order].tolist(),
                                 budget, config.alpha, taken, config.fill_blocked)
                picks[c] = [int(order[q]) for q in chosen]

        n_before = sum(len(p) for p in pools)
        n_round = 0
        for c in range(k):
            if not picks[c]:
                continue
            pos = np.asarray(picks[c], dtype=np.int64)
            pool = pools[c]
            assert (pool.provenance[pos] == TARGET_TRAIN).all(), "selected a point outside the target training split"
            refs = [PointRef(str(s), int(i)) for s, i in zip(pool.series_ids[pos], pool.indices[pos])]
            y_new = np.asarray(oracle(refs), dtype=np.int64)
            for ref, q in zip(refs, pos):
                p = float(scores[c][q])
                log_.records.append(Selection(r, ref, c, p, certainty(p)))
            X_old, y_old = train_sets[c]
            X_new = pool.X[pos]
            X_old = X_old if len(y_old) else np.empty((0, X_new.shape[1]))
            train_sets[c] = (np.vstack([X_old, X_new]), np.concatenate([y_old, y_new]))
            pools[c] = pool.drop(pos)
            models[c] = refit(train_sets[c][0], train_sets[c][1], c, r)
            n_round += len(pos)
        assert sum(len(p) for p in pools) == n_before - n_round
        sizes.append(sizes[-1] + n_round)
        assert sizes[-1] == sum(len(y) for _, y in train_sets)
        if n_round < log_.requested[-1]:
            log.info("round %d: selected %d of %d requested points", r, n_round, log_.requested[-1])
        if on_round is not None:
            snapshots.append(on_round(r, list(models)))
    return ALResult(models, log_, snapshots, sizes)

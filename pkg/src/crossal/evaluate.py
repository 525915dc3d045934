"""Stratified k-fold plans and precision / recall / F1."""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import EmptyGroup, LengthMismatch, TooFewPoints

log = logging.getLogger(__name__)

N_FOLDS = 5
RESULT_COLUMNS = ("dataset", "k", "N", "fold", "round", "tp", "fp", "fn", "tn",
                  "precision", "recall", "f1")


def stratified_kfold(labels, n_folds: int = N_FOLDS, seed: int = 0) -> np.ndarray:
    """Fold id for every point.

    Each class is shuffled and dealt round-robin, the second class continuing
    where the first stopped, so fold sizes differ by at most one and every
    fold's per-class count is the floor or ceiling of its proportional share.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < n_folds:
        raise TooFewPoints(f"{n} points cannot fill {n_folds} folds")
    if len(np.unique(labels)) < 2:
        log.warning("stratified_kfold: only one class present")
    rng = np.random.default_rng(seed)
    fold = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.shape[0])]
        fold[idx] = (offset + np.arange(idx.shape[0])) % n_folds
        offset += idx.shape[0]
    return fold


@dataclass
class FoldPlan:
    """Per-fold train/test positions for source and target (row positions into
    the corresponding feature matrices)."""

    n_folds: int
    seed: int
    source_fold: np.ndarray
    target_fold: np.ndarray

    @classmethod
    def build(cls, source_labels, target_labels, seed: int, n_folds: int = N_FOLDS,
              source_seed: int | None = None, target_seed: int | None = None) -> "FoldPlan":
        s_seed = seed if source_seed is None else source_seed
        t_seed = seed + 1 if target_seed is None else target_seed
        return cls(n_folds, seed, stratified_kfold(source_labels, n_folds, s_seed),
                   stratified_kfold(target_labels, n_folds, t_seed))

    def split(self, fold: int) -> dict[str, np.ndarray]:
        return {
            "source_train": np.flatnonzero(self.source_fold != fold),
            "source_test": np.flatnonzero(self.source_fold == fold),
            "target_train": np.flatnonzero(self.target_fold != fold),
            "target_test": np.flatnonzero(self.target_fold == fold),
        }


@dataclass
class MetricsRow:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    dataset: str = ""
    k: int = 1
    N: int = 0
    fold: int = 0
    round: int = 0
    pct: float | None = None
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d.update(self.extra)
        return d


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def compute_metrics(predictions, truth, **context) -> MetricsRow:
    pred = np.asarray(predictions).astype(bool)
    true = np.asarray(truth).astype(bool)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.shape} predictions vs {true.shape} labels")
    tp = int(np.count_nonzero(pred & true))
    fp = int(np.count_nonzero(pred & ~true))
    fn = int(np.count_nonzero(~pred & true))
    tn = int(np.count_nonzero(~pred & ~true))
    p, r, f1 = _prf(tp, fp, fn)
    return MetricsRow(tp, fp, fn, tn, p, r, f1, **context)


CONTEXT_KEYS = ("dataset", "k", "N", "round", "pct")


def aggregate_folds(rows, keys=CONTEXT_KEYS) -> list[MetricsRow]:
    """Macro mean of precision / recall / F1 over folds for every context.

    Counts are summed; the returned rows carry ``fold = -1`` and the number of
    folds averaged in ``extra["n_folds"]``. Output order follows first
    appearance of each context.
    """
    rows = list(rows)
    if not rows:
        raise EmptyGroup("no rows to aggregate")
    groups: dict[tuple, list[MetricsRow]] = {}
    for row in rows:
        groups.setdefault(tuple(getattr(row, k) for k in keys), []).append(row)
    out = []
    for key, grp in groups.items():
        ctx = dict(zip(keys, key))
        if "N" not in ctx:
            ctx["N"] = int(round(float(np.mean([g.N for g in grp]))))
        agg = MetricsRow(
            tp=sum(g.tp for g in grp), fp=sum(g.fp for g in grp),
            fn=sum(g.fn for g in grp), tn=sum(g.tn for g in grp),
            precision=float(np.mean([g.precision for g in grp])),
            recall=float(np.mean([g.recall for g in grp])),
            f1=float(np.mean([g.f1 for g in grp])),
            fold=-1, **ctx,
        )
        agg.extra["n_folds"] = len(grp)
        out.append(agg)
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(rows, path, columns=RESULT_COLUMNS) -> None:
    rows = list(rows)
    cols = list(columns)
    if any(r.pct is not None for r in rows) and "pct" not in cols:
        cols.append("pct")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            rec = r.as_record()
            w.writerow([_fmt(rec.get(c)) for c in cols])


def read_results_csv(path) -> list[MetricsRow]:
    names = {f.name for f in fields(MetricsRow)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for key in ("tp", "fp", "fn", "tn", "k", "N", "fold", "round"):
                kw[key] = int(rec[key])
            for key in ("precision", "recall", "f1"):
                kw[key] = float(rec[key])
            kw["dataset"] = rec["dataset"]
            kw["pct"] = float(rec["pct"]) if rec.get("pct") else None
            extra = {k: v for k, v in rec.items() if k not in names}
            out.append(MetricsRow(**kw, extra=extra))
    return out

"""The transfer + active-learning pipeline for one (target dataset, k) job.

Per fold: assign source and target points to the k target clusters, fit CORAL
per cluster on the training splits, train a forest on the adapted source
training rows, score the target test split (round 0), then run the
acquisition rounds for every requested budget starting from those base
models. Forest seeds depend on (dataset, k, fold, cluster, round) only, so
round 0 is shared by every budget and a k=1 slice of one sweep reproduces
another run exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import adapt, forest
from ..activelearn import TARGET_TRAIN, AcquisitionConfig, Pool, run_active_learning
from ..cluster import assign, kmeanspp_fit
from ..evaluate import FoldPlan, MetricsRow, compute_metrics, stratified_kfold
from ..features import FeatureMatrix
from ..ingest import stratified_indices
from ..seeding import derive_seed
from .config import ExperimentConfig

log = logging.getLogger(__name__)


@dataclass
class Budget:
    """One point of the budget grid: an absolute N or a percentage of the pool."""

    value: float
    is_pct: bool = False

    def resolve(self, pool_size: int) -> int:
        if not self.is_pct:
            return int(self.value)
        return int(np.floor(self.value / 100.0 * pool_size + 0.5))

    @property
    def label(self) -> str:
        return f"pct{self.value:g}" if self.is_pct else f"N{int(self.value)}"


@dataclass
class JobResult:
    rows: list = field(default_factory=list)
    logs: dict = field(default_factory=dict)
    accounting: list = field(default_factory=list)


def forest_params(cfg: ExperimentConfig, seed: int) -> forest.ForestParams:
    mf = cfg.max_features
    if mf not in ("sqrt", None):
        mf = int(mf)
    return forest.ForestParams(n_trees=cfg.trees, max_features=mf, seed=seed)


def sample_source(features: dict[str, FeatureMatrix], target_id: str, sampling: dict,
                  seed: int) -> FeatureMatrix:
    """Merge every non-target dataset, each stratified-subsampled per ``sampling``.

    Uses the same seeds as :func:`crossal.ingest.build_transfer_pair`, so both
    routes select the same points.
    """
    parts = []
    for ds in sorted(features):
        if ds == target_id:
            continue
        fm = features[ds]
        frac = sampling.get(ds, 1.0)
        if frac < 1.0:
            fm = fm.take(stratified_indices(fm.labels, frac, derive_seed(seed, "source-sample", ds)))
        parts.append(fm)
    return FeatureMatrix.concat(parts)


def _predict_pooled(models, X_test, clusters, threshold):
    # one confusion matrix over all clusters; a cluster without a model predicts normal
    pred = np.zeros(X_test.shape[0], dtype=np.int8)
    for c, model in enumerate(models):
        rows = np.flatnonzero(clusters == c)
        if rows.size and model is not None:
            pred[rows] = forest.predict(model, X_test[rows], threshold=threshold)
    return pred


def fold_plan(cfg: ExperimentConfig, dataset: str, source: FeatureMatrix, target: FeatureMatrix) -> FoldPlan:
    return FoldPlan(cfg.n_folds, cfg.seed,
                    stratified_kfold(source.labels, cfg.n_folds, derive_seed(cfg.seed, "folds-source", dataset)),
                    stratified_kfold(target.labels, cfg.n_folds, derive_seed(cfg.seed, "folds-target", dataset)))


def run_job(cfg: ExperimentConfig, dataset: str, k: int, target: FeatureMatrix,
            source: FeatureMatrix, budgets: list[Budget]) -> JobResult:
    out = JobResult()
    km = kmeanspp_fit(target.data, k, seed=derive_seed(cfg.seed, "kmeans", dataset, k),
                      restarts=cfg.kmeans_restarts)
    ct_all = assign(km, target.data)
    cs_all = assign(km, source.data)
    plan = fold_plan(cfg, dataset, source, target)

    for fold in range(cfg.n_folds):
        split = plan.split(fold)
        s_tr, s_te = split["source_train"], split["source_test"]
        t_tr, t_te = split["target_train"], split["target_test"]
        ct_tr, ct_te = ct_all[t_tr], ct_all[t_te]
        cs_tr, cs_te = cs_all[s_tr], cs_all[s_te]
        X_te, y_te = target.data[t_te], target.labels[t_te]

        def seed_for(c, r, fold=fold):
            return derive_seed(cfg.seed, "forest", dataset, k, fold, c, r)

        base_models, base_train, pools = [], [], []
        for c in range(k):
            Xs = source.data[s_tr[cs_tr == c]]
            ys = source.labels[s_tr[cs_tr == c]]
            Xt = target.data[t_tr[ct_tr == c]]
            if len(Xs) and len(Xt) and (cfg.coral_lambda > 0 or (len(Xs) > 1 and len(Xt) > 1)):
                tf = adapt.fit_coral(Xs, Xt, cfg.coral_lambda)
            else:
                tf = adapt.CoralTransform.identity(source.data.shape[1])
            Xs_ad = adapt.apply(tf, Xs) if len(Xs) else Xs
            # the adapted source test split is built for completeness; only target test is scored
            adapt.apply(tf, source.data[s_te[cs_te == c]])
            assert Xs_ad.shape[0] == ys.shape[0]
            model = forest.fit(Xs_ad, ys, forest_params(cfg, seed_for(c, 0))) if len(Xs) else None
            base_models.append(model)
            base_train.append((Xs_ad, ys.astype(np.int64)))
            rows = t_tr[ct_tr == c]
            pools.append(Pool(target.series_ids[rows], target.indices[rows], target.data[rows],
                              np.full(rows.size, TARGET_TRAIN)))

        label_of = {(s, int(i)): int(y) for s, i, y in
                    zip(target.series_ids[t_tr].tolist(), target.indices[t_tr].tolist(),
                        target.labels[t_tr].tolist())}

        def oracle(refs):
            return np.array([label_of[(r.series_id, r.index)] for r in refs], dtype=np.int64)

        def refit(X, y, c, r):
            return forest.fit(X, y, forest_params(cfg, seed_for(c, r)))

        round0 = compute_metrics(_predict_pooled(base_models, X_te, ct_te, cfg.threshold), y_te)

        for budget in budgets:
            n = budget.resolve(len(t_tr))
            ctx = dict(dataset=dataset, k=k, N=n, fold=fold,
                       pct=budget.value if budget.is_pct else None)
            r0 = MetricsRow(**{**round0.__dict__, **ctx, "round": 0, "extra": {}})
            out.rows.append(r0)
            acq = AcquisitionConfig(cfg.alpha, cfg.rounds, n, cfg.budget_mode, cfg.fill_blocked)

            def on_round(r, models, ctx=ctx):
                row = compute_metrics(_predict_pooled(models, X_te, ct_te, cfg.threshold), y_te, round=r, **ctx)
                out.rows.append(row)
                return row

            res = run_active_learning(base_models, base_train, pools, acq, oracle, refit, on_round)
            key = (dataset, k, budget.label, fold)
            out.logs[key] = res.log
            labelled = len(res.log)
            cap = n if cfg.budget_mode == "global" else n * k
            short = "" if labelled >= cap else "exhausted" if res.log.exhausted else "filtered"
            out.accounting.append({
                "dataset": dataset, "k": k, "budget": budget.label, "N": n, "fold": fold,
                "labelled": labelled, "exhausted": res.log.exhausted,
                "pool_size": int(len(t_tr)), "short": short,
            })
            assert labelled <= cap, "labelled more points than the budget allows"
            if short:
                log.info("%s k=%d %s fold %d: labelled %d of %d (pool exhausted or filtered)",
                         dataset, k, budget.label, fold, labelled, n)
    return out


def run_baseline_job(cfg: ExperimentConfig, dataset: str, target: FeatureMatrix) -> list[MetricsRow]:
    """Within-domain comparator: forest trained on target training folds only."""
    folds = stratified_kfold(target.labels, cfg.n_folds, derive_seed(cfg.seed, "folds-target", dataset))
    if len(np.unique(target.labels)) < 2:
        log.warning("baseline on %s: single-class dataset, F1 is 0 by convention", dataset)
    rows = []
    for fold in range(cfg.n_folds):
        tr, te = np.flatnonzero(folds != fold), np.flatnonzero(folds == fold)
        model = forest.fit(target.data[tr], target.labels[tr],
                           forest_params(cfg, derive_seed(cfg.seed, "baseline", dataset, fold)))
        pred = forest.predict(model, target.data[te], threshold=cfg.threshold)
        rows.append(compute_metrics(pred, target.labels[te], dataset=dataset, k=1, N=0,
                                    fold=fold, round=0))
    return rows

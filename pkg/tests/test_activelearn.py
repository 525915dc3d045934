import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossal.activelearn import (
    TARGET_TRAIN,
    AcquisitionConfig,
    Pool,
    certainty,
    rank_pool,
    round_budgets,
    run_active_learning,
    select_batch,
)
from crossal.errors import ConfigError, OutOfRange
from crossal.forest import ForestParams, fit
from crossal.ingest import PointRef


def oracle_filter(ranked, m, alpha, already=()):
    taken = list(already)
    out = []
    for r in ranked:
        if len(out) == m:
            break
        if any(t.series_id == r.series_id and abs(t.index - r.index) <= alpha for t in taken):
            continue
        taken.append(r)
        out.append(r)
    return out


def random_refs(rng, n, n_series=3, span=200):
    seen, refs = set(), []
    while len(refs) < n:
        r = PointRef(f"s{rng.integers(n_series)}", int(rng.integers(span)))
        if r not in seen:
            seen.add(r)
            refs.append(r)
    return refs


def test_certainty_examples():
    assert certainty(0.5) == 0.0
    assert certainty(0.9) == pytest.approx(0.8, abs=1e-15)
    assert certainty(0.0) == 1.0
    assert certainty(1.0) == 1.0
    np.testing.assert_allclose(certainty(np.array([0.1, 0.5])), [0.8, 0.0])
    for bad in (-0.1, 1.5, float("nan")):
        with pytest.raises(OutOfRange):
            certainty(bad)


def test_rank_pool_examples():
    pool = [(PointRef("s", 0), 0.5), (PointRef("s", 1), 0.1), (PointRef("s", 2), 0.45)]
    assert [p for _, p in rank_pool(pool)] == [0.5, 0.45, 0.1]
    tied = [(PointRef("b", 3), 0.2), (PointRef("a", 9), 0.2), (PointRef("a", 2), 0.2)]
    assert [r for r, _ in rank_pool(tied)] == [PointRef("a", 2), PointRef("a", 9), PointRef("b", 3)]
    with pytest.raises(ValueError):
        rank_pool([])


def test_rank_pool_matches_sort_oracle(rng):
    refs = random_refs(rng, 1000, n_series=5, span=1000)
    ps = np.round(rng.random(1000), 2)  # plenty of ties
    pool = list(zip(refs, ps.tolist()))
    expect = sorted(pool, key=lambda e: (abs(1 - 2 * e[1]), e[0].series_id, e[0].index))
    assert rank_pool(pool) == expect


def test_alpha_zero_is_top_m(rng):
    refs = random_refs(rng, 50)
    assert select_batch(refs, 7, 0) == refs[:7]


def test_window_example():
    ranked = [PointRef("s", 100), PointRef("s", 105), PointRef("s", 200)]
    assert select_batch(ranked, 2, 10) == [PointRef("s", 100), PointRef("s", 200)]
    # the boundary is inclusive: distance alpha is blocked, alpha + 1 is allowed
    assert select_batch([PointRef("s", 0), PointRef("s", 10), PointRef("s", 11)], 3, 10) == [
        PointRef("s", 0), PointRef("s", 11)]


def test_other_series_not_blocked():
    assert len(select_batch([PointRef("a", 5), PointRef("b", 5)], 2, 10)) == 2


def test_accepts_scored_pairs():
    ranked = [(PointRef("s", 1), 0.5), (PointRef("s", 3), 0.4)]
    assert select_batch(ranked, 2, 1) == [PointRef("s", 1), PointRef("s", 3)]


def test_matches_exhaustive_oracle_200_fixtures():
    for f in range(200):
        rng = np.random.default_rng(f)
        refs = random_refs(rng, int(rng.integers(1, 80)), n_series=int(rng.integers(1, 4)), span=150)
        already = random_refs(rng, int(rng.integers(0, 5)), n_series=3, span=150)
        m, alpha = int(rng.integers(0, 30)), int(rng.integers(0, 15))
        assert select_batch(refs, m, alpha, already) == oracle_filter(refs, m, alpha, already)


def test_fill_blocked_tops_up():
    ranked = [PointRef("s", i) for i in range(5)]
    assert select_batch(ranked, 3, 10) == [PointRef("s", 0)]
    assert select_batch(ranked, 3, 10, fill_blocked=True) == [PointRef("s", i) for i in range(3)]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(0, 20), alpha=st.integers(0, 12), extra=st.integers(1, 30))
def test_prefix_stability(seed, m, alpha, extra):
    rng = np.random.default_rng(seed)
    refs = random_refs(rng, 60 + extra, span=120)
    base = refs[:60]
    out = select_batch(base, m, alpha)
    if not out:
        return
    last = base.index(out[-1])
    # replace everything ranked below the last taken point with unrelated points
    mixed = base[: last + 1] + refs[60:]
    if len(out) == m:
        assert select_batch(mixed, m, alpha) == out
    else:
        assert select_batch(mixed, m, alpha)[: len(out)] == out


def test_round_budgets():
    assert round_budgets(10, 5) == [2, 2, 2, 2, 2]
    assert round_budgets(13, 5) == [3, 3, 3, 2, 2]
    assert round_budgets(3, 5) == [1, 1, 1, 0, 0]
    assert sum(round_budgets(1281, 5)) == 1281


def test_config_validation():
    with pytest.raises(ConfigError):
        AcquisitionConfig(alpha=-1)
    with pytest.raises(ConfigError):
        AcquisitionConfig(rounds=0)
    with pytest.raises(ConfigError):
        AcquisitionConfig(budget_mode="other")


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------

def _setup(rng, k=2, per=120, spacing=1, series=("t/a", "t/b")):
    models, train, pools, truth = [], [], [], {}
    for c in range(k):
        Xs = rng.standard_normal((60, 4)) + c
        ys = (rng.random(60) < 0.3).astype(np.int64)
        models.append(fit(Xs, ys, ForestParams(n_trees=5, seed=c)))
        train.append((Xs, ys))
        sids = np.array([series[i % len(series)] for i in range(per)])
        idx = np.arange(per) * spacing + 1000 * c
        X = rng.standard_normal((per, 4)) + c
        for s, i in zip(sids, idx):
            truth[(s, int(i))] = int(rng.random() < 0.2)
        pools.append(Pool(sids, idx, X, np.full(per, TARGET_TRAIN)))
    return models, train, pools, truth


def _oracle(truth):
    return lambda refs: np.array([truth[(r.series_id, r.index)] for r in refs])


def _refit(X, y, c, r):
    return fit(X, y, ForestParams(n_trees=5, seed=100 * c + r))


def test_zero_budget_is_noop(rng):
    models, train, pools, truth = _setup(rng)
    res = run_active_learning(models, train, pools, AcquisitionConfig(total_budget=0), _oracle(truth), _refit)
    assert res.models == models and len(res.log) == 0 and res.snapshots == []


def test_two_per_round(rng):
    models, train, pools, truth = _setup(rng)
    seen = []
    res = run_active_learning(models, train, pools, AcquisitionConfig(alpha=10, rounds=5, total_budget=10),
                              _oracle(truth), _refit, on_round=lambda r, ms: seen.append(r) or r)
    assert len(res.log) == 10
    assert [len(res.log.round(r)) for r in range(1, 6)] == [2] * 5
    assert seen == [1, 2, 3, 4, 5] and res.snapshots == [1, 2, 3, 4, 5]
    assert res.train_sizes == [120 + 2 * r for r in range(6)]
    assert len(set(res.log.selected)) == 10


def test_early_stop_when_pool_exhausted(rng):
    sids = np.array(["t/a"] * 7)
    idx = np.arange(7) * 50  # far apart: all eligible
    X = rng.standard_normal((7, 4))
    pool = Pool(sids, idx, X, np.full(7, TARGET_TRAIN))
    truth = {("t/a", int(i)): 0 for i in idx}
    Xs, ys = rng.standard_normal((30, 4)), rng.integers(0, 2, 30)
    m = fit(Xs, ys, ForestParams(n_trees=3))
    res = run_active_learning([m], [(Xs, ys)], [pool], AcquisitionConfig(alpha=10, total_budget=50),
                              _oracle(truth), _refit)
    assert len(res.log) == 7
    assert res.log.exhausted
    assert len(res.log.round(1)) == 7


def test_invariants_and_cumulative_exclusion(rng):
    for mode in ("global", "per_cluster"):
        models, train, pools, truth = _setup(rng, k=3, per=150)
        cfg = AcquisitionConfig(alpha=3, rounds=5, total_budget=40, budget_mode=mode)
        res = run_active_learning(models, train, pools, cfg, _oracle(truth), _refit)
        sel = res.log.selected
        assert len(sel) == len(set(sel))
        # every pair in the same series is more than alpha apart, across rounds too
        for i, a in enumerate(sel):
            for b in sel[i + 1:]:
                assert a.series_id != b.series_id or abs(a.index - b.index) > 3
        assert res.train_sizes[-1] == sum(len(y) for _, y in train) + len(sel)
        assert all(s.cluster in (0, 1, 2) for s in res.log.records)
        cap = 40 if mode == "global" else 40 * 3
        assert len(sel) <= cap
        for s in res.log.records:
            assert s.certainty == pytest.approx(abs(1 - 2 * s.p_anom))


def test_global_selection_is_certainty_ordered(rng):
    models, train, pools, truth = _setup(rng, k=2)
    res = run_active_learning(models, train, pools, AcquisitionConfig(alpha=0, rounds=1, total_budget=15),
                              _oracle(truth), _refit)
    all_c = np.sort(np.concatenate([np.abs(1 - 2 * _proba(models[c], pools[c].X)) for c in range(2)]))
    got = sorted(s.certainty for s in res.log.records)
    np.testing.assert_allclose(got, all_c[:15])


def _proba(model, X):
    from crossal.forest import predict_proba
    return predict_proba(model, X)


def test_new_points_use_unadapted_features_and_oracle_labels(rng):
    models, train, pools, truth = _setup(rng, k=1)
    captured = {}

    def refit(X, y, c, r):
        captured[r] = (X.copy(), y.copy())
        return _refit(X, y, c, r)

    res = run_active_learning(models, train, pools, AcquisitionConfig(alpha=0, rounds=1, total_budget=5),
                              _oracle(truth), refit)
    X1, y1 = captured[1]
    pos = {(s, int(i)): j for j, (s, i) in enumerate(zip(pools[0].series_ids, pools[0].indices))}
    for n, s in enumerate(res.log.records):
        j = pos[(s.ref.series_id, s.ref.index)]
        np.testing.assert_array_equal(X1[60 + n], pools[0].X[j])
        assert y1[60 + n] == truth[(s.ref.series_id, s.ref.index)]


def test_provenance_guard(rng):
    models, train, pools, truth = _setup(rng, k=1)
    bad = Pool(pools[0].series_ids, pools[0].indices, pools[0].X, np.full(len(pools[0]), "target_test"))
    with pytest.raises(AssertionError):
        run_active_learning(models, train, [bad], AcquisitionConfig(total_budget=5), _oracle(truth), _refit)


def test_missing_model_scores_normal(rng):
    _, _, pools, truth = _setup(rng, k=1)
    res = run_active_learning([None], [(np.empty((0, 4)), np.empty(0, dtype=np.int64))], pools,
                              AcquisitionConfig(alpha=0, rounds=2, total_budget=4), _oracle(truth), _refit)
    assert len(res.log) == 4
    assert all(s.p_anom == 0.0 for s in res.log.round(1))
    assert res.models[0] is not None


def test_selection_log_csv(tmp_path, rng):
    models, train, pools, truth = _setup(rng)
    res = run_active_learning(models, train, pools, AcquisitionConfig(total_budget=6), _oracle(truth), _refit)
    res.log.write_csv(tmp_path / "sel.csv")
    with open(tmp_path / "sel.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["round", "series_id", "index", "cluster", "p_anom", "certainty"]
    assert len(rows) == 7

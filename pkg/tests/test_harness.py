import json
import logging

import numpy as np
import pytest

from conftest import make_series
from crossal.errors import ConfigError, DataError, EmptyGroup, UnknownDataset
from crossal.evaluate import read_results_csv
from crossal.features import extract_many
from crossal.harness.config import ExperimentConfig, build_config, load_config_file
from crossal.harness.experiments import (
    ResultsTable,
    format_rate,
    load_features,
    per_point_increase,
    rate_table,
    run_baseline,
    run_exp1,
    run_exp2,
    run_exp3,
)
from crossal.harness.pipeline import Budget, fold_plan, sample_source
from crossal.harness.report import emit_report
from crossal.ingest import write_catalog
from crossal.synthetic import make_cross_domain_catalog


@pytest.fixture(scope="module")
def catalog():
    return make_cross_domain_catalog(seed=1, target_series=2, source_series=2, length=300)


@pytest.fixture(scope="module")
def features(catalog):
    return {ds: extract_many(catalog[ds]) for ds in catalog.dataset_ids}


def cfg(**kw):
    base = dict(data_root="unused", trees=8, kmeans_restarts=2)
    base.update(kw)
    return ExperimentConfig(**base).validate()


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_config_defaults():
    c = ExperimentConfig(data_root="x").validate()
    assert c.budgets == [0, 10, 20, 40, 80, 160, 320, 640, 1280]
    assert c.k_grid == [1, 2, 3, 5, 10]
    assert (c.alpha, c.rounds, c.window, c.coral_lambda, c.trees) == (10, 5, 32, 1.0, 100)
    assert c.pct_budgets == [20.0, 40.0, 80.0, 100.0]
    assert c.source_sampling == {"IOPS": 0.05}


@pytest.mark.parametrize("kw", [dict(budgets=[-1]), dict(pct_budgets=[0.0]), dict(pct_budgets=[101.0]),
                                dict(k_grid=[0]), dict(alpha=-2), dict(window=4), dict(budget_mode="x"),
                                dict(experiment="exp9"), dict(source_sampling={"A": 0.0})])
def test_config_invalid(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(data_root="x", **kw).validate()


def test_config_needs_a_data_source():
    with pytest.raises(ConfigError):
        ExperimentConfig().validate()


def test_config_file_formats(tmp_path):
    (tmp_path / "c.txt").write_text("# sweep\nk_grid = 1, 2\nbudgets=0,40\nalpha = 3\n"
                                    "source_sampling = IOPS:0.1, AWS:0.5\nfill_blocked = yes\n")
    raw = load_config_file(tmp_path / "c.txt")
    assert raw == {"k_grid": [1, 2], "budgets": [0, 40], "alpha": 3,
                   "source_sampling": {"IOPS": 0.1, "AWS": 0.5}, "fill_blocked": True}
    (tmp_path / "c.json").write_text(json.dumps({"k_grid": [3], "seed": 9, "data_root": "d"}))
    c = build_config(tmp_path / "c.json", {"seed": 4, "alpha": None})
    assert c.k_grid == [3] and c.seed == 4 and c.alpha == 10
    with pytest.raises(ConfigError):
        build_config(tmp_path / "c.json", {"bogus": 1})
    (tmp_path / "bad.txt").write_text("alpha 3\n")
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "bad.txt")
    with pytest.raises(ConfigError):
        build_config(None, {"alpha": "ten", "data_root": "d"})


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def test_rate_arithmetic():
    assert format_rate(per_point_increase(0.5834, 0.7918, 1280)) == "0.00016"
    assert format_rate(per_point_increase(0.2, 0.328, 640)) == "0.00020"
    assert per_point_increase(0.3, 0.3, 0) is None and format_rate(None) == ""


def test_pct_budget_resolution():
    assert Budget(20.0, is_pct=True).resolve(1000) == 200
    assert Budget(100.0, is_pct=True).resolve(4801) == 4801
    assert Budget(40).resolve(10) == 40
    assert Budget(20.0, True).label == "pct20" and Budget(40).label == "N40"


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def contexts(rows):
    return {(r.dataset, r.k, r.N, r.fold) for r in rows}


def test_exp1_sweep_cardinality(features):
    t = run_exp1(cfg(k_grid=[1, 2], budgets=[0, 40]), features)
    assert len(contexts(t.rows)) == 2 * 2 * 2 * 5
    keys = [(r.dataset, r.k, r.N, r.fold, r.round) for r in t.rows]
    assert len(keys) == len(set(keys))
    # N=0 is the pure transfer model: round 0 only
    assert {r.round for r in t.rows if r.N == 0} == {0}
    assert {r.round for r in t.rows if r.N == 40} == set(range(6))
    # round 0 is shared across budgets
    r0 = {(r.dataset, r.k, r.fold, r.N): r.f1 for r in t.rows if r.round == 0}
    assert all(r0[(d, k, f, 0)] == r0[(d, k, f, 40)] for d, k, f, n in r0 if n == 0)
    # every target test point scored once per fold
    n_target = {ds: len(fm.labels) for ds, fm in features.items()}
    for ds in n_target:
        folds = [r for r in t.rows if r.dataset == ds and r.k == 1 and r.N == 0]
        assert sum(r.tp + r.fp + r.fn + r.tn for r in folds) == n_target[ds]


def test_budget_accounting(features):
    t = run_exp1(cfg(k_grid=[1, 3], budgets=[0, 10, 40], targets=["target"]), features)
    for a in t.accounting:
        assert a["labelled"] <= a["N"]
        assert (a["labelled"] == a["N"]) == (a["short"] == "")
        log = t.logs[(a["dataset"], a["k"], a["budget"], a["fold"])]
        assert len(log) == a["labelled"]
        assert len(set(log.selected)) == len(log)


def test_exp2_is_slice_of_exp1(features):
    c = cfg(k_grid=[1, 2], budgets=[0, 20], targets=["target"])
    one = run_exp1(c, features)
    two = run_exp2(c, features)
    assert {r.k for r in two.rows} == {1}
    sl = [r.as_record() for r in one.rows if r.k == 1]
    assert sl == [r.as_record() for r in two.rows]
    rates = rate_table(two)
    assert [r["N"] for r in rates] == [0, 20]
    assert rates[0]["per_point_increase"] is None
    assert rates[1]["difference"] == pytest.approx(rates[1]["f1_after"] - rates[1]["f1_before"])


def test_exp3_percentages_and_comparator(features):
    c = cfg(pct_budgets=[20, 100], targets=["target"], rounds=2)
    t = run_exp3(c, features)
    pool = len(features["target"].labels) * 4 // 5
    ns = {a["budget"]: a["N"] for a in t.accounting}
    assert abs(ns["pct20"] - 0.2 * pool) <= 1 and abs(ns["pct100"] - pool) <= 1
    assert {r.pct for r in t.rows} == {20.0, 100.0}
    assert len(t.baseline) == 5 and {r.dataset for r in t.baseline} == {"target"}


def test_exp3_full_budget_consumes_pool_with_top_up(features):
    c = cfg(pct_budgets=[100], targets=["target"], rounds=2, fill_blocked=True)
    t = run_exp3(c, features)
    for a in t.accounting:
        assert a["labelled"] == a["pool_size"] and a["short"] == ""


def test_exp3_full_budget_leaves_only_blocked_points(features):
    c = cfg(pct_budgets=[100], targets=["target"], rounds=1, alpha=10)
    t = run_exp3(c, features)
    fm = features["target"]
    plan = fold_plan(c, "target", sample_source(features, "target", c.source_sampling, c.seed), fm)
    for fold in range(5):
        tr = plan.split(fold)["target_train"]
        log = t.logs[("target", 1, "pct100", fold)]
        chosen = set(log.selected)
        by_series = {}
        for r in chosen:
            by_series.setdefault(r.series_id, []).append(r.index)
        for s, i in zip(fm.series_ids[tr], fm.indices[tr]):
            if (s, i) in chosen:
                continue
            assert any(abs(i - j) <= 10 for j in by_series.get(s, []))


def test_exp3_excludes_iops_by_default(features):
    feats = dict(features)
    feats["IOPS"] = features["source"]
    t = run_exp3(cfg(pct_budgets=[20], rounds=1), feats)
    assert "IOPS" not in {r.dataset for r in t.rows}


def test_baseline_separable_and_single_class(caplog):
    rng = np.random.default_rng(0)
    vals = np.r_[rng.normal(0, 0.1, 300), rng.normal(50, 0.1, 100)]
    labels = np.r_[np.zeros(300), np.ones(100)].astype(np.int8)
    sep = extract_many([make_series("sep", "a", vals, labels)])
    sep.data[:, :] = np.where(sep.labels[:, None] == 1, 10.0, -10.0) + 0.01 * rng.standard_normal(sep.data.shape)
    flat = extract_many([make_series("flat", "a", rng.standard_normal(200))])
    with caplog.at_level(logging.WARNING):
        t = run_baseline(cfg(), {"sep": sep, "flat": flat})
    f1 = {}
    for r in t.rows:
        f1.setdefault(r.dataset, []).append(r.f1)
    assert np.mean(f1["sep"]) == 1.0
    assert np.mean(f1["flat"]) == 0.0
    assert "single-class" in caplog.text


def test_unknown_target(features):
    with pytest.raises(UnknownDataset):
        run_exp1(cfg(targets=["nope"], k_grid=[1], budgets=[0]), features)


def test_needs_two_datasets(features):
    with pytest.raises(DataError):
        run_exp1(cfg(k_grid=[1], budgets=[0]), {"target": features["target"]})


def test_parallel_matches_serial(features):
    c = cfg(k_grid=[1, 2], budgets=[0, 10])
    serial = run_exp1(c, features)
    c.jobs = 2
    parallel = run_exp1(c, features)
    assert [r.as_record() for r in serial.rows] == [r.as_record() for r in parallel.rows]


def test_data_root_and_precomputed_routes_agree(tmp_path, catalog, features):
    write_catalog(catalog, tmp_path / "data")
    from crossal.features import write_features
    for ds, fm in features.items():
        write_features(fm, tmp_path / "feat" / f"{ds}.csv")
    a = load_features(cfg(data_root=str(tmp_path / "data")))
    b = load_features(cfg(data_root=None, features_from=str(tmp_path / "feat")))
    for ds in features:
        np.testing.assert_array_equal(a[ds].data, features[ds].data)
        np.testing.assert_array_equal(b[ds].data, features[ds].data)
        assert b[ds].series_ids.tolist() == a[ds].series_ids.tolist()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_empty_results_write_nothing(tmp_path):
    with pytest.raises(EmptyGroup):
        emit_report(ResultsTable("exp1", cfg()), tmp_path / "out")
    assert list(tmp_path.iterdir()) == []


def test_report_files_and_determinism(tmp_path, features):
    c = cfg(k_grid=[1, 2], budgets=[0, 10])
    files = emit_report(run_exp1(c, features), tmp_path / "a")
    emit_report(run_exp1(c, features), tmp_path / "b")
    assert "plot_exp1_target.csv" in files and "plot_exp1_source.csv" in files
    assert len([f for f in files if f.startswith("plot_exp1_")]) == 2
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f
    plot = (tmp_path / "a" / "plot_exp1_target.csv").read_text().splitlines()
    assert plot[0] == "N,k1,k2" and len(plot) == 3
    meta = json.loads((tmp_path / "a" / "run_config.json").read_text())
    assert meta["config"]["seed"] == 0 and meta["kernel_backend"] in ("numba", "numpy")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a", "b"]  # no temp dirs left behind


def test_rerun_from_persisted_config(tmp_path, features):
    c = cfg(k_grid=[1], budgets=[0, 10], targets=["target"])
    emit_report(run_exp2(c, features), tmp_path / "a")
    meta = json.loads((tmp_path / "a" / "run_config.json").read_text())
    again = ExperimentConfig(**meta["config"]).validate()
    emit_report(run_exp2(again, features), tmp_path / "b")
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    rates = (tmp_path / "a" / "exp2_rates.csv").read_text().splitlines()
    assert rates[1].endswith(",")  # N=0: empty per-point cell
    rows = read_results_csv(tmp_path / "a" / "results.csv")
    assert len(rows) == 5 + 5 * 6


def test_exp3_and_baseline_reports(tmp_path, features):
    c = cfg(pct_budgets=[20], targets=["target"], rounds=1)
    files = emit_report(run_exp3(c, features), tmp_path / "e3")
    assert {"plot_exp3.csv", "table_exp3.csv", "baseline_results.csv"} <= set(files)
    head = (tmp_path / "e3" / "table_exp3.csv").read_text().splitlines()
    assert head[0] == "dataset,pct20,within_domain" and head[1].split(",")[2] != ""
    assert (tmp_path / "e3" / "results.csv").read_text().splitlines()[0].endswith(",pct")
    files = emit_report(run_baseline(cfg(), features), tmp_path / "b")
    assert "baseline_summary.csv" in files

"""Write a finished run to disk.

Everything goes to a temporary sibling directory first and is moved into
place only after every file has been written, so a failure leaves no partial
output. All files are plain CSV / JSON with fixed row and column order, so a
rerun with the same configuration is byte-identical.
"""
from __future__ import annotations

import csv
import json
import shutil
import tempfile
from pathlib import Path

from .. import __version__
from ..errors import EmptyGroup
from ..evaluate import write_results_csv
from ..kernels import BACKEND
from .experiments import ResultsTable, baseline_means, format_rate, rate_table


def _num(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if not isinstance(v, str) else v for v in r])


def run_config(table: ResultsTable) -> dict:
    return {
        "crossal_version": __version__,
        "kernel_backend": BACKEND,
        "experiment": table.experiment,
        "config": table.config.to_dict(),
    }


def _summary_rows(table):
    out = []
    for r in table.summary():
        out.append([r.dataset, r.k, r.N, "" if r.pct is None else r.pct, r.round,
                    r.precision, r.recall, r.f1, r.extra["delta_f1"],
                    format_rate(r.extra["per_point_increase"]), r.extra["final"], r.extra["n_folds"]])
    return out


SUMMARY_HEADER = ["dataset", "k", "N", "pct", "round", "precision", "recall", "f1",
                  "delta_f1", "per_point_increase", "final", "n_folds"]


def _plot_exp1(table, tmp, written):
    final = table.final()
    ks = sorted({r.k for r in final})
    for ds in sorted({r.dataset for r in final}):
        grid = {(r.N, r.k): r.f1 for r in final if r.dataset == ds}
        ns = sorted({n for n, _ in grid})
        rows = [[n] + [grid.get((n, k), "") for k in ks] for n in ns]
        name = f"plot_exp1_{ds}.csv"
        _write_csv(tmp / name, ["N"] + [f"k{k}" for k in ks], rows)
        written.append(name)
    # fold-averaged F1 per (dataset, k, N): one row per dataset and k
    ns = sorted({r.N for r in final})
    rows = []
    for ds in sorted({r.dataset for r in final}):
        for k in ks:
            grid = {r.N: r.f1 for r in final if r.dataset == ds and r.k == k}
            rows.append([ds, k] + [grid.get(n, "") for n in ns])
    _write_csv(tmp / "table_f1_by_k.csv", ["dataset", "k"] + [f"N{n}" for n in ns], rows)
    written.append("table_f1_by_k.csv")


def _plot_exp2(table, tmp, written):
    final = table.final()
    datasets = sorted({r.dataset for r in final})
    grid = {(r.N, r.dataset): r.f1 for r in final}
    ns = sorted({r.N for r in final})
    _write_csv(tmp / "plot_exp2.csv", ["N"] + datasets,
               [[n] + [grid.get((n, d), "") for d in datasets] for n in ns])
    rates = rate_table(table)
    _write_csv(tmp / "exp2_rates.csv",
               ["dataset", "N", "precision", "recall", "f1_before", "f1_after", "difference",
                "per_point_increase"],
               [[r["dataset"], r["N"], r["precision"], r["recall"], r["f1_before"], r["f1_after"],
                 r["difference"], format_rate(r["per_point_increase"])] for r in rates])
    written += ["plot_exp2.csv", "exp2_rates.csv"]


def _plot_exp3(table, tmp, written):
    final = table.final()
    datasets = sorted({r.dataset for r in final})
    grid = {(r.pct, r.dataset): r.f1 for r in final}
    pcts = sorted({r.pct for r in final})
    _write_csv(tmp / "plot_exp3.csv", ["pct"] + datasets,
               [[p] + [grid.get((p, d), "") for d in datasets] for p in pcts])
    base = baseline_means(table.baseline)
    rows = []
    for d in datasets:
        rows.append([d] + [grid.get((p, d), "") for p in pcts]
                    + [base[d].f1 if d in base else ""])
    _write_csv(tmp / "table_exp3.csv", ["dataset"] + [f"pct{p:g}" for p in pcts] + ["within_domain"], rows)
    if table.baseline:
        write_results_csv(table.baseline, tmp / "baseline_results.csv")
        written.append("baseline_results.csv")
    written += ["plot_exp3.csv", "table_exp3.csv"]


def _plot_baseline(table, tmp, written):
    base = baseline_means(table.baseline)
    _write_csv(tmp / "baseline_summary.csv", ["dataset", "precision", "recall", "f1", "n_folds"],
               [[d, r.precision, r.recall, r.f1, r.extra["n_folds"]] for d, r in sorted(base.items())])
    written.append("baseline_summary.csv")


_PLOTS = {"exp1": _plot_exp1, "exp2": _plot_exp2, "exp3": _plot_exp3, "baseline": _plot_baseline}


def emit_report(table: ResultsTable, out_dir) -> list[str]:
    """Write the run under ``out_dir`` and return the relative file names.

    Raises :class:`EmptyGroup` before touching the filesystem when there are
    no rows. An existing ``out_dir`` is replaced.
    """
    if not table.rows:
        raise EmptyGroup("no results to report")
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        written = ["results.csv", "summary.csv", "run_config.json"]
        write_results_csv(table.rows, tmp / "results.csv")
        _write_csv(tmp / "summary.csv", SUMMARY_HEADER, _summary_rows(table))
        (tmp / "run_config.json").write_text(
            json.dumps(run_config(table), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if table.accounting:
            cols = ["dataset", "k", "budget", "N", "fold", "labelled", "exhausted", "short", "pool_size"]
            _write_csv(tmp / "budget_accounting.csv", cols,
                       [[a[c] for c in cols] for a in table.accounting])
            written.append("budget_accounting.csv")
        if table.logs:
            (tmp / "selections").mkdir()
            for (ds, k, label, fold), sel in sorted(table.logs.items()):
                name = f"selections/{ds}_k{k}_{label}_fold{fold}.csv"
                sel.write_csv(tmp / name)
                written.append(name)
        _PLOTS[table.experiment](table, tmp, written)
        if out_dir.exists():
            shutil.rmtree(out_dir)
        tmp.rename(out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return sorted(written)

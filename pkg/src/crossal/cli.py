"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError
from .evaluate import read_results_csv
from .features import extract_many, write_features
from .harness.config import ExperimentConfig, build_config
from .harness.experiments import RUNNERS, ResultsTable
from .harness.report import emit_report
from .ingest import load_catalog, write_catalog

log = logging.getLogger("crossal")

# flag -> config key
_EXPERIMENT_FLAGS = {
    "--data-root": "data_root", "--target": "targets", "--exclude": "exclude",
    "--k-grid": "k_grid", "--budgets": "budgets", "--pct-budgets": "pct_budgets",
    "--alpha": "alpha", "--rounds": "rounds", "--seed": "seed", "--window": "window",
    "--features-from": "features_from", "--coral-lambda": "coral_lambda", "--trees": "trees",
    "--out": "out", "--jobs": "jobs", "--budget-mode": "budget_mode",
    "--source-sampling": "source_sampling", "--threshold": "threshold",
}


def _add_experiment_args(p):
    p.add_argument("--config", help="key = value or JSON config file")
    for flag, key in _EXPERIMENT_FLAGS.items():
        p.add_argument(flag, dest=key, default=None)
    p.add_argument("--fill-blocked", dest="fill_blocked", action="store_true", default=None,
                   help="top up a short round with filter-blocked candidates")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="crossal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)  # noqa: E731

    p = add("validate-data", help="parse a data root and print per-dataset statistics")
    p.add_argument("--data-root", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = add("features", help="extract window features to <out>/<dataset>.csv")
    p.add_argument("--data-root", required=True)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    for name in RUNNERS:
        _add_experiment_args(add(name, help=f"run {name}"))

    p = add("report", help="regenerate plot data from a results directory")
    p.add_argument("--results", required=True, help="directory written by an experiment run")
    p.add_argument("--out", required=True)

    p = add("make-synthetic", help="write a synthetic two-domain catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-series", type=int, default=5)
    p.add_argument("--source-series", type=int, default=4)
    p.add_argument("--length", type=int, default=1200)
    return parser


def _cmd_validate(args):
    catalog = load_catalog(args.data_root, jobs=args.jobs)
    if not catalog.datasets:
        raise DataError(f"no datasets under {args.data_root}")
    print(catalog.summary_json())


def _cmd_features(args):
    if args.window < 8:
        raise ConfigError("window must be >= 8")
    catalog = load_catalog(args.data_root, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ds in catalog.dataset_ids:
        write_features(extract_many(catalog[ds], args.window), out / f"{ds}.csv")
        print(out / f"{ds}.csv")


def _cmd_experiment(args):
    overrides = {key: getattr(args, key) for key in _EXPERIMENT_FLAGS.values()}
    overrides["fill_blocked"] = args.fill_blocked
    cfg = build_config(args.config, overrides, experiment=args.command)
    cfg.experiment = args.command
    cfg.validate()
    table = RUNNERS[cfg.experiment](cfg)
    files = emit_report(table, cfg.out)
    print(f"wrote {len(files)} files to {cfg.out}")


def _cmd_report(args):
    src = Path(args.results)
    try:
        meta = json.loads((src / "run_config.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {src / 'run_config.json'}: {exc}") from exc
    cfg = ExperimentConfig(**meta["config"])
    table = ResultsTable(meta["experiment"], cfg, rows=read_results_csv(src / "results.csv"))
    if (src / "baseline_results.csv").exists():
        table.baseline = read_results_csv(src / "baseline_results.csv")
    if table.experiment == "baseline":
        table.baseline = list(table.rows)
    files = emit_report(table.sort(), args.out)
    print(f"wrote {len(files)} files to {args.out}")


def _cmd_synthetic(args):
    from .synthetic import make_cross_domain_catalog

    catalog = make_cross_domain_catalog(args.seed, args.target_series, args.source_series, args.length)
    write_catalog(catalog, args.out)
    print(catalog.summary_json())


_COMMANDS = {"validate-data": _cmd_validate, "features": _cmd_features, "report": _cmd_report,
             "make-synthetic": _cmd_synthetic, **{name: _cmd_experiment for name in RUNNERS}}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

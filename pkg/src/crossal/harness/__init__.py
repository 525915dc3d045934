"""Experiment configuration, drivers and report emission."""

from .config import ExperimentConfig, build_config
from .experiments import ResultsTable, run_baseline, run_exp1, run_exp2, run_exp3
from .report import emit_report

__all__ = ["ExperimentConfig", "ResultsTable", "build_config", "emit_report",
           "run_baseline", "run_exp1", "run_exp2", "run_exp3"]

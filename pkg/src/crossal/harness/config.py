"""Experiment configuration: dataclass, file loading and override merging.

Config files are either JSON or flat ``key = value`` text (``#`` comments,
lists comma-separated, the source-sampling map as ``NAME:fraction`` pairs).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..cluster import DEFAULT_K_GRID
from ..errors import ConfigError
from ..features import DEFAULT_WINDOW, MIN_WINDOW
from ..ingest import DEFAULT_SOURCE_SAMPLING

EXPERIMENTS = ("exp1", "exp2", "exp3", "baseline")
DEFAULT_BUDGETS = (0, 10, 20, 40, 80, 160, 320, 640, 1280)
DEFAULT_PCT_BUDGETS = (20.0, 40.0, 80.0, 100.0)


@dataclass
class ExperimentConfig:
    experiment: str = "exp1"
    data_root: str | None = None
    targets: list = field(default_factory=list)  # empty: every dataset in the catalog
    exclude: list = field(default_factory=list)
    k_grid: list = field(default_factory=lambda: list(DEFAULT_K_GRID))
    budgets: list = field(default_factory=lambda: list(DEFAULT_BUDGETS))
    pct_budgets: list = field(default_factory=lambda: list(DEFAULT_PCT_BUDGETS))
    alpha: int = 10
    rounds: int = 5
    seed: int = 0
    window: int = DEFAULT_WINDOW
    features_from: str | None = None
    coral_lambda: float = 1.0
    trees: int = 100
    max_features: str = "sqrt"
    threshold: float = 0.5
    n_folds: int = 5
    kmeans_restarts: int = 10
    budget_mode: str = "global"
    fill_blocked: bool = False
    source_sampling: dict = field(default_factory=lambda: dict(DEFAULT_SOURCE_SAMPLING))
    out: str = "results"
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.data_root is None and self.features_from is None:
            raise ConfigError("either data_root or features_from is required")
        if any(b < 0 for b in self.budgets):
            raise ConfigError("budgets must be nonnegative")
        if any(not 0 < p <= 100 for p in self.pct_budgets):
            raise ConfigError("percentage budgets must lie in (0, 100]")
        if any(k < 1 for k in self.k_grid):
            raise ConfigError("cluster counts must be >= 1")
        if self.alpha < 0 or self.rounds < 1 or self.trees < 1 or self.jobs < 1:
            raise ConfigError("alpha >= 0, rounds >= 1, trees >= 1 and jobs >= 1 are required")
        if self.window < MIN_WINDOW:
            raise ConfigError(f"window must be >= {MIN_WINDOW}")
        if self.coral_lambda < 0:
            raise ConfigError("coral_lambda must be >= 0")
        if self.budget_mode not in ("global", "per_cluster"):
            raise ConfigError("budget_mode must be 'global' or 'per_cluster'")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        for ds, frac in self.source_sampling.items():
            if not 0 < frac <= 1:
                raise ConfigError(f"source fraction for {ds!r} must lie in (0, 1]")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_LIST_INT = {"k_grid", "budgets"}
_LIST_FLOAT = {"pct_budgets"}
_LIST_STR = {"targets", "exclude"}
_BOOL = {"fill_blocked"}


def _field_types():
    return {f.name: f for f in fields(ExperimentConfig)}


def coerce(key: str, value):
    """Convert a raw (string or JSON) value to the type of ``key``."""
    key = key.replace("-", "_")
    known = _field_types()
    if key not in known:
        raise ConfigError(f"unknown config key {key!r}")
    if value is None:
        return key, None
    try:
        if key in _LIST_INT | _LIST_FLOAT | _LIST_STR:
            items = value if isinstance(value, list) else [v for v in str(value).split(",") if v.strip()]
            cast = int if key in _LIST_INT else float if key in _LIST_FLOAT else str
            return key, [cast(str(v).strip()) if cast is not str else str(v).strip() for v in items]
        if key == "source_sampling":
            if isinstance(value, dict):
                return key, {str(k): float(v) for k, v in value.items()}
            pairs = [p for p in str(value).split(",") if p.strip()]
            return key, {p.split(":")[0].strip(): float(p.split(":")[1]) for p in pairs}
        if key in _BOOL:
            if isinstance(value, bool):
                return key, value
            return key, str(value).strip().lower() in ("1", "true", "yes", "on")
        if key in ("alpha", "rounds", "seed", "window", "trees", "n_folds", "kmeans_restarts", "jobs"):
            return key, int(value)
        if key in ("coral_lambda", "threshold"):
            return key, float(value)
        return key, str(value)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    return dict(coerce(k, v) for k, v in raw.items())


def build_config(file_path=None, overrides=None, **defaults) -> ExperimentConfig:
    """Defaults < config file < explicit overrides (``None`` values ignored)."""
    values = {}
    for k, v in defaults.items():
        if v is not None:
            values.update([coerce(k, v)])
    if file_path:
        values.update(load_config_file(file_path))
    for k, v in (overrides or {}).items():
        if v is not None:
            values.update([coerce(k, v)])
    return ExperimentConfig(**values).validate()

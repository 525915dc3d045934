import os
import subprocess
import sys

import pytest

from crossal.ingest import write_catalog
from crossal.synthetic import make_cross_domain_catalog


def _run(args, disable_jit):
    env = dict(os.environ)
    env.pop("CROSSAL_DISABLE_JIT", None)
    if disable_jit:
        env["CROSSAL_DISABLE_JIT"] = "1"
    return subprocess.run([sys.executable, *args], env=env, capture_output=True, text=True, check=True)


@pytest.mark.parametrize("flag,expect", [(False, "numba"), (True, "numpy")])
def test_env_flag_selects_backend(flag, expect):
    out = _run(["-c", "from crossal.kernels import BACKEND; print(BACKEND)"], flag)
    assert out.stdout.strip() == expect


@pytest.mark.slow
def test_pipeline_identical_across_backends(tmp_path):
    write_catalog(make_cross_domain_catalog(seed=5, target_series=2, source_series=2, length=300), tmp_path / "d")
    for flag, name in ((False, "a"), (True, "b")):
        _run(["-m", "crossal.cli", "exp1", "--data-root", str(tmp_path / "d"), "--k-grid", "1,2",
              "--budgets", "0,20", "--trees", "8", "--out", str(tmp_path / name)], flag)
    for f in ("results.csv", "budget_accounting.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

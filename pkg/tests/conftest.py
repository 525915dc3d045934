import numpy as np
import pytest

from crossal.ingest import TimeSeries


def write_csv(path, rows, header="timestamp,value,is_anomaly"):
    path.write_text(header + "\n" + "".join(r + "\n" for r in rows), encoding="utf-8")
    return path


def make_series(dataset, name, values, labels=None, start=0):
    values = np.asarray(values, dtype=np.float64)
    labels = np.zeros(len(values), dtype=np.int8) if labels is None else labels
    return TimeSeries(dataset, name, start + np.arange(len(values)), values, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])

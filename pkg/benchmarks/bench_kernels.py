"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 3] [--n 4000]

Both backends are imported directly, so the env flag is irrelevant here. The
first numba call (compilation or cache load) is excluded from the timings.
Outputs are also compared, so a run doubles as an equivalence spot check.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from crossal.kernels import _numba, _numpy


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def cases(n, rng):
    values = np.cumsum(rng.standard_normal(n))
    X = rng.standard_normal((n, 24))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.standard_normal(n) > 1.2).astype(np.int64)
    counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.int64)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    C = rng.standard_normal((10, 24))
    tree_args = (X, y, counts, order, 5, -1, 2, 1, np.uint64(12345))

    def forest(mod):
        parts, roots, off = [], [], 0
        for t in range(20):
            c = np.bincount(np.random.default_rng(t).integers(0, n, n), minlength=n).astype(np.int64)
            f, th, lf, rg, c0, c1 = mod.build_tree(X, y, c, order, 5, -1, 2, 1, np.uint64(t))
            parts.append((f, th, np.where(lf >= 0, lf + off, -1), np.where(rg >= 0, rg + off, -1), c0, c1))
            roots.append(off)
            off += len(f)
        cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
        leaf_p = cols[5] / np.maximum(cols[4] + cols[5], 1)
        return cols[:4] + [leaf_p, np.asarray(roots, dtype=np.int64)]

    fa = forest(_numba)
    return {
        "window_features": lambda m: m.window_features(values, 32),
        "nearest_centroid": lambda m: m.nearest_centroid(X, C),
        "build_tree": lambda m: m.build_tree(*tree_args),
        "forest_predict(20 trees)": lambda m: m.forest_predict(X, *fa),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<26}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}{'max |diff|':>12}")
    for name, call in cases(args.n, rng).items():
        call(_numba)  # compile / load cache
        t_nb, out_nb = _time(lambda: call(_numba), args.repeat)
        t_np, out_np = _time(lambda: call(_numpy), args.repeat)
        print(f"{name:<26}{t_nb * 1e3:>10.2f}{t_np * 1e3:>10.2f}{t_np / t_nb:>9.1f}"
              f"{_max_diff(out_nb, out_np):>12.2e}")


if __name__ == "__main__":
    main()

"""Time the compiled core against the NumPy fallback on the three hot loops.

Usage: python3 benchmarks/bench_core.py [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from hypadams import _core_py

try:
    from hypadams import _core
except ImportError:  # extension not built
    _core = None


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _rel(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.maximum(np.abs(x), np.max(np.abs(x)) * 1e-12 + 1e-300)
    return float(np.max(np.abs(x - y) / scale))


def cases():
    lams = np.linspace(-24.0, 24.0, 2041)
    rhos = np.linspace(0.01, 12.0, 400)
    xs, ws = _core_py.inner_rule()
    t = np.linspace(0.01, 20.0, 21)
    return {
        "spherical_table": lambda m: m.spherical_table(lams, rhos),
        "bipolar_nodes(21 outer)": lambda m: m.bipolar_nodes(3.0, t, xs, ws),
        "oneil_bruteforce(5 cells)": lambda m: m.oneil_bruteforce(5, 4),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':28s} {'numpy [s]':>10s} {'cython [s]':>10s} {'speedup':>8s} {'max rel':>10s}")
    for name, run in cases().items():
        tp = _best(lambda: run(_core_py), args.repeat)
        if _core is None:
            print(f"{name:28s} {tp:10.4f} {'n/a':>10s}")
            continue
        tc = _best(lambda: run(_core), args.repeat)
        a, b = run(_core_py), run(_core)
        diff = max(_rel(x, y) for x, y in zip(a if isinstance(a, tuple) else (a,),
                                               b if isinstance(b, tuple) else (b,)))
        print(f"{name:28s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()

"""Time the compiled and pure-Python windowed-median kernels on a
VDP-sized problem (100 profiles x 314 locations).

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from l1profile import _pykernels
from l1profile.profiles import make_grid

try:
    from l1profile import _ckernels
except ImportError:
    _ckernels = None


def problem(n_profiles=100, seed=0):
    grid = make_grid(0.0, 0.626, 0.002)
    rng = np.random.default_rng(seed)
    x = np.tile(grid, n_profiles)
    y = np.sin(6 * x) + rng.standard_normal(len(x))
    group = np.repeat(np.arange(n_profiles), len(grid))
    order = np.argsort(x, kind="stable")
    return x[order], y[order], group[order], n_profiles, grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    x, y, group, n, grid = problem()
    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.insert(0, ("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the Python fallback only")
    cases = {
        "window_medians b=0.01": lambda m: m.window_medians(x, y, grid, 0.01, 0),
        "window_medians b=0.1": lambda m: m.window_medians(x, y, grid, 0.1, 0),
        "loo_window_medians b=0.01": lambda m: m.loo_window_medians(x, y, group, n, grid, 0.01, 0),
    }
    for label, fn in cases.items():
        times = {}
        for name, mod in backends:
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        line = "  ".join(f"{name} {t * 1e3:9.1f} ms" for name, t in times.items())
        if len(times) == 2:
            line += f"  speedup {times['python'] / times['cython']:6.1f}x"
        print(f"{label:28s} {line}")
        if len(backends) == 2:
            a, b = (fn(mod) for _, mod in backends)
            assert np.array_equal(a, b, equal_nan=True), "backends disagree"


if __name__ == "__main__":
    main()

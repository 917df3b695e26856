"""Compare the compiled kernel backend against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64,128,256,480]
"""
from __future__ import annotations

import argparse
import time

import numpy as np


def load_backends():
    import mechsearch.kernels.pure as pure
    backends = {"pure": pure}
    try:
        import mechsearch.kernels._fastcore as fast
        backends["cython"] = fast
    except ImportError:
        print("compiled backend unavailable; benchmarking pure only")
    return backends


def bench(fn, *args, repeat=5):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="64,128,256,480")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    backends = load_backends()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<14}{'size':>6}" + "".join(f"{n:>12}" for n in backends))
    for n in sizes:
        free = rng.random((n, n)) > 0.3
        free[0, 0] = False  # ensure a distance source
        times = [bench(b.edt_squared, free) for b in backends.values()]
        ref = None
        for name, t in zip(backends, times):
            out = backends[name].edt_squared(free)
            if ref is None:
                ref = out
            elif not np.array_equal(ref, out):
                raise AssertionError(f"backend mismatch on edt_squared size {n}")
        print(f"{'edt_squared':<14}{n:>6}" + "".join(f"{t * 1000:>10.2f}ms" for t in times))

    for n in sizes:
        verts = np.array([[n * 0.1, n * 0.2], [n * 0.9, n * 0.15],
                          [n * 0.8, n * 0.85], [n * 0.15, n * 0.7]])
        times = [bench(b.convex_mask, verts, n, n) for b in backends.values()]
        ref = None
        for name in backends:
            out = backends[name].convex_mask(verts, n, n)
            if ref is None:
                ref = out
            elif not np.array_equal(ref, out):
                raise AssertionError(f"backend mismatch on convex_mask size {n}")
        print(f"{'convex_mask':<14}{n:>6}" + "".join(f"{t * 1000:>10.2f}ms" for t in times))


if __name__ == "__main__":
    main()

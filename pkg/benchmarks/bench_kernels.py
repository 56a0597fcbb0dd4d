"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are run on the same inputs; the script prints the best time of
each, the speedup and the largest difference between their outputs (the
random streams are shared, so the Monte Carlo kernels agree exactly).
"""

import argparse
import time

import numpy as np

from kpzmp import _backend


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    y = np.array([12, 9, 8, 5, 3, 2, 0, -1, -4, -6, -7, -9, -12, -13, -15, -18, -20, -21, -24, -26], dtype=np.int64)
    ring = np.exp(1j * np.linspace(0, 2 * np.pi, 128, endpoint=False))
    v = 0.25 * ring  # TASEP circles of radius 1/4 around 0 and -1
    u = -1 + 0.25 * ring
    small = np.array([3, 1, 0, -2, -5], dtype=np.int64)
    times = np.array([0.5, 1.0, 2.0])
    yield f"ch_matrix 128x128, N={len(y)}", lambda k: k.ch_matrix(y, v, u)
    yield "simulate_tasep 2000 samples, N=5", lambda k: k.simulate_tasep(small, times, 2000, 1, 0)
    jumps = np.array([12, 12, 12, 13, 15], dtype=np.int64)
    yield "lpp_jump_times 2000 samples", lambda k: k.lpp_jump_times(small, jumps, 2000, 1, 0)


def diff(a, b):
    if isinstance(a, (list, tuple)):
        return max(diff(x, z) for x, z in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    py = _backend.get("python")
    try:
        cy = _backend.get("cython")
    except ImportError:
        print("compiled extension not built; only the fallback is available")
        return 1
    print(f"{'kernel':40s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s} {'rel diff':>10s}")
    for name, fn in cases():
        tc, oc = best_of(lambda: fn(cy), args.repeat)
        tp, op = best_of(lambda: fn(py), args.repeat)
        print(f"{name:40s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff(oc, op):10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

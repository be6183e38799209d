"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--batch 2048] [--repeat 5]

Inputs mimic one simulation block (K = 4 ACs, M_TOT = 64 antennas). Reports
the best wall time over ``--repeat`` runs per kernel and backend.
"""
import argparse
import time

import numpy as np

from dmimo import kernels
from dmimo.power import augmented_matrix


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def inputs(rng, B, K, N):
    H = (rng.standard_normal((B, K, N)) + 1j * rng.standard_normal((B, K, N))) / np.sqrt(2)
    G, _, _ = kernels.zf_columns(H, backend="python")
    A = kernels.cross_gains(H, G, backend="python") + rng.uniform(0, 1e-3, (B, K, K))
    p = rng.uniform(0.01, 0.1, (B, K))
    s2 = np.full((B, K), 1e-3)
    R = rng.uniform(0, 0.5, (B, K, K))
    R[:, np.arange(K), np.arange(K)] = 0.0
    f = rng.uniform(1e-3, 1, (B, K))
    D = augmented_matrix(R, f, np.ones((B, K)), 1.0)
    return {
        "zf_columns": lambda b: kernels.zf_columns(H, backend=b),
        "cross_gains": lambda b: kernels.cross_gains(H, G, backend=b),
        "sinr_from_gains": lambda b: kernels.sinr_from_gains(A, p, s2, backend=b),
        "power_iteration": lambda b: kernels.power_iteration(D, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--N", type=int, default=64)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    cases = inputs(np.random.default_rng(0), args.batch, args.K, args.N)
    print(f"batch={args.batch} K={args.K} N={args.N} backends={','.join(backends)}")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
        row = f"{name:<18}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in t:
            row += f"{t['python'] / t['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

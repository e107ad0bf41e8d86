"""Head-to-head timing of the numba and numpy kernel backends.

Imports both implementation modules directly, bypassing the
ESCALE_BACKEND switch, so one run covers both. Reports per-call times
for the batch distance kernel and for a full clustered build at a few
desk-scale shapes.

Usage: python benchmarks/kernel_benchmark.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from escale.kernels import numba_impl, numpy_impl

SHAPES = [
    ("euclidean", numpy_impl.EUCLIDEAN, 10_000, 8),
    ("euclidean", numpy_impl.EUCLIDEAN, 10_000, 32),
    ("cosine", numpy_impl.COSINE, 10_000, 400),
    ("hamming", numpy_impl.HAMMING, 10_000, 64),
    ("jaccard", numpy_impl.JACCARD, 10_000, 64),
]


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    print(f"{'kernel':28s} {'shape':16s} {'numpy':>10s} {'numba':>10s} {'ratio':>7s}")

    for name, code, n, d in SHAPES:
        X = rng.random((n, d))
        if code == numpy_impl.HAMMING:
            X = np.rint(X * 3)
        q = X[0].copy()
        numba_impl.dists(code, q, X)  # compile outside the timed region
        t_np = _time(lambda: numpy_impl.dists(code, q, X), args.repeats)
        t_nb = _time(lambda: numba_impl.dists(code, q, X), args.repeats)
        print(
            f"{'dists/' + name:28s} {f'{n}x{d}':16s} {t_np * 1e3:9.3f}ms "
            f"{t_nb * 1e3:9.3f}ms {t_np / t_nb:6.1f}x"
        )

    for n, d, r_c in [(5_000, 8, 0.25), (5_000, 32, 0.6)]:
        X = rng.random((n, d))
        pids = np.arange(n, dtype=np.int64)
        numba_impl.greedy_select(numpy_impl.EUCLIDEAN, X[:100], r_c)

        def run(impl):
            sel, _ = impl.greedy_select(impl.EUCLIDEAN, X, r_c)
            impl.assign_nearest(impl.EUCLIDEAN, X, X[sel], pids[sel])

        t_np = _time(lambda: run(numpy_impl), max(1, args.repeats // 3))
        t_nb = _time(lambda: run(numba_impl), max(1, args.repeats // 3))
        print(
            f"{'build/euclidean':28s} {f'{n}x{d} rc={r_c}':16s} {t_np * 1e3:9.3f}ms "
            f"{t_nb * 1e3:9.3f}ms {t_np / t_nb:6.1f}x"
        )


if __name__ == "__main__":
    main()

"""Timing comparison of the numba and pure-numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n-perm N] [--n-boot N]

Runs each hot kernel on a cohort-sized problem (38 rows, 68 features,
3 targets) with both backends and reports wall time and speedup. The
numba side is warmed up first so JIT compilation is excluded.
"""

import argparse
import time

import numpy as np

from lingmood import _kernels, rng, stats


def timeit(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-perm", type=int, default=10_000)
    parser.add_argument("--n-boot", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    if not _kernels.NUMBA_ENABLED:
        raise SystemExit("unset LINGMOOD_NO_NUMBA to benchmark both backends")

    gen = np.random.default_rng(args.seed)
    n, p, q = 38, 68, 3
    F = gen.normal(size=(n, p))
    T = gen.normal(size=(n, q))
    fz, _ = stats._ranked_zscores(F, "feature")
    tz, _ = stats._ranked_zscores(T, "target")
    abs_obs = np.abs(fz.T @ tz / n)
    perms = rng.permutation_indices(args.seed, "bench", args.n_perm, n)
    idx = rng.bootstrap_indices(args.seed, "bench", args.n_boot, n)
    x, y = F[:, 0].copy(), T[:, 0].copy()

    cases = [
        ("average_ranks (n=38)",
         _kernels.average_ranks_numba, _kernels.average_ranks_numpy, (x,)),
        (f"rank_columns ({n}x{p})",
         _kernels.rank_columns_numba, _kernels.rank_columns_numpy, (F,)),
        (f"perm_corr_null ({args.n_perm} perms, {p}x{q} pairs)",
         _kernels.perm_corr_null_numba, _kernels.perm_corr_null_numpy,
         (fz, tz, perms, abs_obs)),
        (f"bootstrap_spearman ({args.n_boot} resamples)",
         _kernels.bootstrap_spearman_numba, _kernels.bootstrap_spearman_numpy,
         (x, y, idx)),
        (f"bootstrap_pearson ({args.n_boot} resamples)",
         _kernels.bootstrap_pearson_numba, _kernels.bootstrap_pearson_numpy,
         (x, y, idx)),
    ]

    print(f"{'kernel':<45} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for name, fn_nb, fn_np, fargs in cases:
        fn_nb(*fargs)  # JIT warm-up
        t_nb, out_nb = timeit(fn_nb, *fargs)
        t_np, out_np = timeit(fn_np, *fargs)
        if isinstance(out_nb, tuple):
            for a, b in zip(out_nb, out_np):
                np.testing.assert_allclose(a, b, atol=1e-10)
        else:
            np.testing.assert_allclose(out_nb, out_np, atol=1e-10)
        print(f"{name:<45} {t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()

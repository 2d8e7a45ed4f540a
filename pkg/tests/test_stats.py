import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lingmood import rng, stats
from lingmood.stats import (
    ConstantColumnWarning,
    UndefinedCorrelationError,
    average_ranks,
    bootstrap_rho_ci,
    fisher_z,
    mass_bivariate,
    max_stat_permutation,
    one_sample_t,
    spearman,
)


# --------------------------------------------------------------------------
# independent oracles
# --------------------------------------------------------------------------

def naive_ranks(x):
    """Average ranks straight from the definition."""
    x = list(x)
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = sum(range(i + 1, j + 2)) / (j - i + 1)
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def naive_spearman(x, y):
    rx, ry = naive_ranks(x), naive_ranks(y)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx)
                    * sum((b - my) ** 2 for b in ry))
    return num / den


def exhaustive_max_stat(F, T):
    """Enumerate all row permutations of T; exact p-values and null."""
    n = F.shape[0]
    obs = np.array([[naive_spearman(F[:, j], T[:, k])
                     for k in range(T.shape[1])]
                    for j in range(F.shape[1])])
    null = []
    for perm in itertools.permutations(range(n)):
        Tp = T[list(perm)]
        stat = max(
            abs(naive_spearman(F[:, j], Tp[:, k]))
            for j in range(F.shape[1]) for k in range(T.shape[1])
        )
        null.append(stat)
    null = np.array(null)
    p_exact = np.array([
        [(null >= abs(obs[j, k])).mean() for k in range(T.shape[1])]
        for j in range(F.shape[1])
    ])
    return obs, null, p_exact


# --------------------------------------------------------------------------
# ranks and spearman
# --------------------------------------------------------------------------

def test_average_ranks_examples():
    assert average_ranks([10, 20, 20, 30]).tolist() == [1, 2.5, 2.5, 4]
    assert average_ranks([1, 2, 5, 9]).tolist() == [1, 2, 3, 4]
    assert average_ranks([7, 7, 7]).tolist() == [2, 2, 2]


def test_rank_sum_invariant():
    gen = np.random.default_rng(0)
    for _ in range(20):
        n = int(gen.integers(1, 40))
        x = gen.integers(0, 5, size=n).astype(float)
        r = average_ranks(x)
        assert r.sum() == pytest.approx(n * (n + 1) / 2)


def test_spearman_identity_and_reversal():
    x = np.array([3.0, 1.0, 4.0, 1.5, 9.0])
    assert spearman(x, x) == pytest.approx(1.0)
    assert spearman(np.arange(5.0), np.arange(5.0)[::-1]) == pytest.approx(-1.0)


def test_spearman_vs_naive_oracle():
    gen = np.random.default_rng(42)
    for _ in range(200):
        n = int(gen.integers(3, 30))
        x = gen.integers(0, 8, size=n).astype(float)
        y = gen.normal(size=n)
        if np.ptp(x) == 0:
            continue
        assert spearman(x, y) == pytest.approx(naive_spearman(x, y), abs=1e-12)


def test_spearman_constant_raises():
    with pytest.raises(UndefinedCorrelationError):
        spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=4, max_size=25, unique=True),
       st.integers(0, 2 ** 31))
def test_spearman_monotone_transform_invariance(xs, seed):
    x = np.array(xs, dtype=float)
    y = np.random.default_rng(seed).normal(size=len(x))
    base = spearman(x, y)
    assert spearman(np.exp(x / 50.0), y) == pytest.approx(base, abs=1e-10)
    assert spearman(3.5 * x + 2.0, y) == pytest.approx(base, abs=1e-10)


# --------------------------------------------------------------------------
# mass bivariate + permutation
# --------------------------------------------------------------------------

def test_mass_bivariate_matches_pairwise():
    gen = np.random.default_rng(7)
    F = gen.normal(size=(12, 5))
    T = gen.normal(size=(12, 2))
    R = mass_bivariate(F, T)
    for j in range(5):
        for k in range(2):
            assert R[j, k] == pytest.approx(spearman(F[:, j], T[:, k]),
                                            abs=1e-12)


def test_mass_bivariate_self_correlation():
    gen = np.random.default_rng(8)
    F = gen.normal(size=(10, 3))
    T = np.column_stack([F[:, 1], gen.normal(size=10)])
    assert mass_bivariate(F, T)[1, 0] == pytest.approx(1.0)


def test_mass_bivariate_constant_column_warns_and_zeroes():
    gen = np.random.default_rng(9)
    F = gen.normal(size=(10, 3))
    F[:, 2] = 5.0
    T = gen.normal(size=(10, 1))
    with pytest.warns(ConstantColumnWarning):
        R = mass_bivariate(F, T)
    assert R[2, 0] == 0.0


def test_permutation_report_consistency():
    gen = np.random.default_rng(11)
    F = gen.normal(size=(20, 10))
    T = np.column_stack([F[:, 0] + gen.normal(size=20) * 0.2,
                         gen.normal(size=20)])
    rep = max_stat_permutation(F, T, n_perm=999, alpha=0.05, seed=4)
    assert (rep.p_corr >= rep.p_uncorr - 1e-15).all()
    assert rep.p_corr.min() > 0 and rep.p_corr.max() <= 1
    assert np.abs(rep.rho).max() <= 1
    by_threshold = np.abs(rep.rho) > rep.critical_value
    by_p = rep.p_corr < rep.alpha
    assert (by_threshold == by_p).all()
    assert rep.null_max_stats.shape == (999,)


def test_permutation_determinism():
    gen = np.random.default_rng(12)
    F = gen.normal(size=(15, 4))
    T = gen.normal(size=(15, 2))
    a = max_stat_permutation(F, T, n_perm=300, seed=99)
    b = max_stat_permutation(F, T, n_perm=300, seed=99)
    assert np.array_equal(a.null_max_stats, b.null_max_stats)
    assert np.array_equal(a.p_corr, b.p_corr)
    c = max_stat_permutation(F, T, n_perm=300, seed=100)
    assert not np.array_equal(a.null_max_stats, c.null_max_stats)


@pytest.mark.parametrize("n", [5, 6, 7])
def test_exhaustive_mode_matches_enumeration_oracle(n):
    gen = np.random.default_rng(n)
    F = gen.normal(size=(n, 1))
    T = gen.normal(size=(n, 1))
    obs, null, p_exact = exhaustive_max_stat(F, T)
    rep = max_stat_permutation(F, T, exhaustive=True, seed=0)
    assert rep.n_perm == math.factorial(n)
    assert rep.rho[0, 0] == pytest.approx(obs[0, 0], abs=1e-12)
    assert rep.p_corr[0, 0] == pytest.approx(p_exact[0, 0], abs=1e-12)
    assert np.sort(rep.null_max_stats) == pytest.approx(np.sort(null), abs=1e-12)


def test_monte_carlo_p_within_noise_of_exact():
    gen = np.random.default_rng(66)
    F = gen.normal(size=(6, 1))
    T = gen.normal(size=(6, 1))
    _, _, p_exact = exhaustive_max_stat(F, T)
    n_perm = 4000
    rep = max_stat_permutation(F, T, n_perm=n_perm, seed=1)
    se = math.sqrt(p_exact[0, 0] * (1 - p_exact[0, 0]) / n_perm)
    assert abs(rep.p_corr[0, 0] - p_exact[0, 0]) < 3 * se + 2 / n_perm


# --------------------------------------------------------------------------
# bootstrap CI
# --------------------------------------------------------------------------

def test_bootstrap_ci_perfect_correlation():
    x = np.arange(10.0)
    ci = bootstrap_rho_ci(x, x, n_boot=200, seed=0)
    assert ci.lower == pytest.approx(1.0)
    assert ci.upper == pytest.approx(1.0)


def test_bootstrap_ci_seeded_replay_oracle():
    from scipy.stats import spearmanr

    gen = np.random.default_rng(3)
    x = gen.normal(size=15)
    y = 0.5 * x + gen.normal(size=15)
    n_boot, level, seed = 500, 0.95, 21
    ci = bootstrap_rho_ci(x, y, n_boot=n_boot, level=level, seed=seed)
    idx = rng.bootstrap_indices(seed, "bootstrap_rho_ci", n_boot, x.size)
    vals = np.array([spearmanr(x[i], y[i]).statistic for i in idx])
    lo, hi = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2])
    assert ci.lower == pytest.approx(lo, abs=1e-9)
    assert ci.upper == pytest.approx(hi, abs=1e-9)


def test_bootstrap_ci_contains_truth_often():
    gen = np.random.default_rng(5)
    x = gen.normal(size=40)
    y = x + gen.normal(size=40) * 0.5
    ci = bootstrap_rho_ci(x, y, n_boot=1000, seed=2)
    assert -1 <= ci.lower <= ci.upper <= 1
    assert ci.lower < spearman(x, y) < ci.upper + 1e-9


def test_bootstrap_degenerate_data_errors():
    x = np.array([1.0, 1.0, 1.0, 1.0])
    y = np.array([0.0, 1.0, 2.0, 3.0])
    with pytest.raises(stats.DegenerateDataError):
        bootstrap_rho_ci(x, y, n_boot=50, seed=0)


# --------------------------------------------------------------------------
# fisher z and one-sample t
# --------------------------------------------------------------------------

def test_fisher_z_values():
    assert fisher_z(0.0) == 0.0
    assert fisher_z(0.5) == pytest.approx(math.atanh(0.5))
    assert fisher_z(-0.3) == pytest.approx(-fisher_z(0.3))


def test_fisher_z_clamps_with_warning():
    with pytest.warns(UserWarning):
        z = fisher_z(1.0)
    assert z == pytest.approx(math.atanh(1 - 1e-7))


def test_one_sample_t_hand_computed():
    t, df, p = one_sample_t([1, 1, 1, -1])
    assert t == pytest.approx(1.0)
    assert df == 3
    assert 0 < p < 1


def test_one_sample_t_zero_variance_errors():
    with pytest.raises(ValueError):
        one_sample_t([2.0, 2.0, 2.0])

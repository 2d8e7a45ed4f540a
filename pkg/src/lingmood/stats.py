"""Resampling-statistics core.

Tie-aware ranks, Spearman correlation, mass-bivariate screening with
max-statistic permutation control of the family-wise error rate, percentile
bootstrap confidence intervals, Fisher's z transform and a one-sample t-test.
"""

import math
import warnings
from dataclasses import dataclass, field
from itertools import permutations as _all_permutations

import numpy as np
from scipy import stats as sps

from . import _kernels, rng

FISHER_CLAMP = 1.0 - 1e-7


class UndefinedCorrelationError(ValueError):
    """Correlation requested on a constant input."""


class DegenerateDataError(ValueError):
    """Resampling could not produce enough usable replicates."""


class ConstantColumnWarning(UserWarning):
    pass


@dataclass
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    n_boot: int


@dataclass
class PermutationReport:
    """Mass-bivariate results with family-wise correction.

    ``rho``, ``p_uncorr`` and ``p_corr`` are p x q (features x targets).
    A comparison is family-wise significant iff ``|rho| > critical_value``,
    equivalently iff ``p_corr < alpha``.
    """

    rho: np.ndarray
    p_uncorr: np.ndarray
    p_corr: np.ndarray
    critical_value: float
    null_max_stats: np.ndarray
    n_perm: int
    seed: int
    alpha: float
    exhaustive: bool = False
    constant_features: list = field(default_factory=list)
    constant_targets: list = field(default_factory=list)

    def significant_mask(self) -> np.ndarray:
        return np.abs(self.rho) > self.critical_value

    def to_rows(self, feature_names=None, target_names=None):
        """One (feature, target, rho, p_uncorr, p_corr) row per comparison."""
        p, q = self.rho.shape
        feature_names = feature_names or [f"f{j}" for j in range(p)]
        target_names = target_names or [f"t{k}" for k in range(q)]
        rows = []
        for j in range(p):
            for k in range(q):
                rows.append(
                    {
                        "feature": feature_names[j],
                        "target": target_names[k],
                        "rho": self.rho[j, k],
                        "p_uncorr": self.p_uncorr[j, k],
                        "p_corr": self.p_corr[j, k],
                    }
                )
        return rows


def average_ranks(x) -> np.ndarray:
    """Ranks 1..n; tied values get the mean of their rank positions."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("average_ranks expects a non-empty 1-d vector")
    return _kernels.average_ranks_kernel(x)


def spearman(x, y) -> float:
    """Spearman rank correlation (Pearson correlation of average ranks)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("constant input, correlation undefined")
    rx = average_ranks(x)
    ry = average_ranks(y)
    return _pearson(rx, ry)


def _pearson(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0:
        raise UndefinedCorrelationError("constant input, correlation undefined")
    return float(np.clip((a @ b) / den, -1.0, 1.0))


def _ranked_zscores(M, kind):
    """Rank columns, then z-score; constant columns become all-zero + warning."""
    M = np.asarray(M, dtype=np.float64)
    R = _kernels.rank_columns_kernel(M)
    mu = R.mean(axis=0)
    sd = R.std(axis=0)
    constant = np.flatnonzero(sd == 0)
    if constant.size:
        warnings.warn(
            f"{constant.size} constant {kind} column(s) {constant.tolist()}: "
            "rho set to 0",
            ConstantColumnWarning,
            stacklevel=3,
        )
    sd_safe = np.where(sd == 0, 1.0, sd)
    Z = (R - mu) / sd_safe
    Z[:, constant] = 0.0
    return Z, constant.tolist()


def mass_bivariate(F, T) -> np.ndarray:
    """p x q matrix of Spearman coefficients between columns of F and T."""
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    if F.shape[0] != T.shape[0]:
        raise ValueError("row counts differ")
    if F.shape[0] < 3:
        raise ValueError("need at least 3 rows")
    fz, _ = _ranked_zscores(F, "feature")
    tz, _ = _ranked_zscores(T, "target")
    return np.clip(fz.T @ tz / F.shape[0], -1.0, 1.0)


def _critical_value(null_stats, alpha, adj):
    """Smallest threshold t with (adj + #{null >= s}) / (M + adj) < alpha
    exactly for s > t."""
    m = null_stats.size
    k_minus_1 = math.ceil(alpha * (m + adj) - adj) - 1
    if k_minus_1 < 0:
        return float("inf")
    desc = np.sort(null_stats)[::-1]
    # the tie epsilon keeps "|rho| > critical_value" exactly equivalent to
    # "p_corr < alpha" under the tolerant exceedance count
    return float(desc[k_minus_1]) + _kernels.TIE_EPS


def max_stat_permutation(
    F, T, n_perm: int = 10_000, alpha: float = 0.05, seed: int = 0,
    exhaustive: bool = False,
) -> PermutationReport:
    """Permutation test over the whole p x q family of Spearman comparisons.

    Target rows are permuted jointly across targets; the per-permutation
    maximum |rho| forms the null used for the family-wise corrected p-values
    and critical value. Monte-Carlo p-values carry the +1 correction; in
    exhaustive mode all n! row permutations (identity included) are
    enumerated and p-values are exact.
    """
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    n = F.shape[0]
    if n != T.shape[0]:
        raise ValueError("row counts differ")
    if n < 3:
        raise ValueError("need at least 3 rows")
    if not exhaustive and n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")

    fz, const_f = _ranked_zscores(F, "feature")
    tz, const_t = _ranked_zscores(T, "target")
    rho = np.clip(fz.T @ tz / n, -1.0, 1.0)
    abs_obs = np.abs(rho)

    if exhaustive:
        perms = np.array(list(_all_permutations(range(n))), dtype=np.int64)
        adj = 0
    else:
        perms = rng.permutation_indices(seed, "max_stat_permutation", n_perm, n)
        adj = 1
    m = perms.shape[0]

    null_max, exceed_uncorr = _kernels.perm_corr_null_kernel(fz, tz, perms, abs_obs)
    exceed_corr = (null_max[:, None, None] >= abs_obs[None] - _kernels.TIE_EPS).sum(axis=0)
    p_uncorr = (adj + exceed_uncorr) / (m + adj)
    p_corr = (adj + exceed_corr) / (m + adj)

    return PermutationReport(
        rho=rho,
        p_uncorr=p_uncorr,
        p_corr=p_corr,
        critical_value=_critical_value(null_max, alpha, adj),
        null_max_stats=null_max,
        n_perm=m,
        seed=seed,
        alpha=alpha,
        exhaustive=exhaustive,
        constant_features=const_f,
        constant_targets=const_t,
    )


def _bootstrap_ci(x, y, n_boot, level, seed, stage, kernel,
                  idx=None) -> ConfidenceInterval:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")

    if idx is None:
        idx = rng.bootstrap_indices(seed, stage, n_boot, x.size)
    else:
        idx = idx.copy()
    vals = kernel(x, y, idx)
    # degenerate (constant) resamples are redrawn from fresh substreams,
    # capped so pathological data fails loudly instead of spinning
    max_redraw_rounds = 50
    round_no = 0
    bad = np.flatnonzero(np.isnan(vals))
    while bad.size:
        round_no += 1
        if round_no > max_redraw_rounds:
            raise DegenerateDataError(
                f"{bad.size} degenerate resamples remain after "
                f"{max_redraw_rounds} redraw rounds"
            )
        for b in bad:
            idx[b] = rng.substream(
                seed, f"{stage}/redraw{round_no}", int(b)
            ).integers(0, x.size, size=x.size)
        vals[bad] = kernel(x, y, idx[bad])
        bad = bad[np.isnan(vals[bad])]

    lo, hi = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2])
    return ConfidenceInterval(float(lo), float(hi), level, n_boot)


def bootstrap_rho_ci(x, y, n_boot: int = 10_000, level: float = 0.95,
                     seed: int = 0) -> ConfidenceInterval:
    """Percentile bootstrap CI for the Spearman correlation of (x, y)."""
    return _bootstrap_ci(x, y, n_boot, level, seed, "bootstrap_rho_ci",
                         _kernels.bootstrap_spearman_kernel)


def bootstrap_pearson_ci(x, y, n_boot: int = 10_000, level: float = 0.95,
                         seed: int = 0) -> ConfidenceInterval:
    """Percentile bootstrap CI for the Pearson correlation of (x, y)."""
    return _bootstrap_ci(x, y, n_boot, level, seed, "bootstrap_pearson_ci",
                         _kernels.bootstrap_pearson_kernel)


def bootstrap_rho_ci_matrix(F, T, n_boot: int = 10_000, level: float = 0.95,
                            seed: int = 0):
    """Spearman bootstrap CIs for every (F column, T column) pair.

    The paired resample index draws are shared across comparisons, so one
    seed yields one coherent family of intervals. Returns (lower, upper)
    p x q arrays.
    """
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    n, p = F.shape
    q = T.shape[1]
    idx = rng.bootstrap_indices(seed, "bootstrap_rho_ci", n_boot, n)
    lower = np.empty((p, q))
    upper = np.empty((p, q))
    for j in range(p):
        for k in range(q):
            if np.ptp(F[:, j]) == 0 or np.ptp(T[:, k]) == 0:
                lower[j, k] = np.nan
                upper[j, k] = np.nan
                continue
            ci = _bootstrap_ci(F[:, j], T[:, k], n_boot, level, seed,
                               "bootstrap_rho_ci",
                               _kernels.bootstrap_spearman_kernel, idx=idx)
            lower[j, k] = ci.lower
            upper[j, k] = ci.upper
    return lower, upper


def fisher_z(r: float) -> float:
    """atanh(r); |r| >= 1 is clamped to +/-(1 - 1e-7) with a warning."""
    if abs(r) >= 1.0:
        warnings.warn(
            f"|r|={abs(r)} clamped before Fisher transform",
            UserWarning, stacklevel=2,
        )
        r = math.copysign(FISHER_CLAMP, r)
    return math.atanh(r)


def one_sample_t(values):
    """One-sample t-test of mean 0. Returns (t, df, two-sided p)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least 2 values")
    sd = v.std(ddof=1)
    if sd == 0:
        raise ValueError("zero variance input")
    n = v.size
    t = v.mean() / (sd / math.sqrt(n))
    df = n - 1
    p = 2.0 * sps.t.sf(abs(t), df)
    return float(t), df, float(p)

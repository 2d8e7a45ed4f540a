"""Hot numeric kernels: tie-aware ranking, permutation nulls, bootstrap correlations.

Two interchangeable backends:

* a numba ``@njit`` path (default), loop-based, compiled on first use;
* a pure-numpy vectorized path, selected by setting ``LINGMOOD_NO_NUMBA=1``
  in the environment (also used automatically when numba is missing).

Both backends are importable directly (``*_numba`` / ``*_numpy``) so the
benchmark and the cross-check tests can compare them; the public names
(``average_ranks_kernel`` etc.) are bound to the active backend at import.
"""

import os

import numpy as np
from scipy.stats import rankdata

_FLAG = os.environ.get("LINGMOOD_NO_NUMBA", "").strip().lower()
_WANT_NUMBA = _FLAG not in {"1", "true", "yes"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

NUMBA_ENABLED = _WANT_NUMBA and HAVE_NUMBA

# permuted statistics equal to the observed one up to float noise count as
# exceedances, so enumeration agrees with exact-arithmetic oracles
TIE_EPS = 1e-12


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def average_ranks_numpy(x):
    """Ranks 1..n with ties getting the mean of their rank positions."""
    return rankdata(np.asarray(x, dtype=np.float64), method="average")


def rank_columns_numpy(X):
    return rankdata(np.asarray(X, dtype=np.float64), method="average", axis=0)


def perm_corr_null_numpy(rfz, rtz, perms, abs_obs, chunk=2048):
    """Null max-|rho| per permutation plus per-comparison exceedance counts.

    rfz, rtz are rank-transformed, z-scored column matrices (n x p, n x q);
    the correlation matrix for a permuted target is then rfz.T @ rtz[perm] / n.
    """
    n = rfz.shape[0]
    n_perm = perms.shape[0]
    null_max = np.empty(n_perm)
    exceed = np.zeros(abs_obs.shape, dtype=np.int64)
    for lo in range(0, n_perm, chunk):
        hi = min(lo + chunk, n_perm)
        rt_perm = rtz[perms[lo:hi]]                     # (c, n, q)
        a = np.abs(np.einsum("np,cnq->cpq", rfz, rt_perm) / n)
        null_max[lo:hi] = a.max(axis=(1, 2))
        exceed += (a >= abs_obs - TIE_EPS).sum(axis=0)
    return null_max, exceed


def bootstrap_spearman_numpy(x, y, idx):
    """Spearman rho per with-replacement resample; NaN where undefined."""
    xs = x[idx]
    ys = y[idx]
    rx = rankdata(xs, method="average", axis=1)
    ry = rankdata(ys, method="average", axis=1)
    return _rowwise_pearson(rx, ry)


def bootstrap_pearson_numpy(x, y, idx):
    """Pearson r per with-replacement resample; NaN where undefined."""
    return _rowwise_pearson(x[idx], y[idx])


def _rowwise_pearson(a, b):
    a = a - a.mean(axis=1, keepdims=True)
    b = b - b.mean(axis=1, keepdims=True)
    num = (a * b).sum(axis=1)
    den = np.sqrt((a * a).sum(axis=1) * (b * b).sum(axis=1))
    out = np.full(a.shape[0], np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return np.clip(out, -1.0, 1.0, out=out)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

def _average_ranks_impl(x):
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _rank_columns_impl(X):
    n, p = X.shape
    out = np.empty((n, p), dtype=np.float64)
    for j in range(p):
        out[:, j] = _average_ranks_impl(X[:, j].copy())
    return out


def _perm_corr_null_impl(rfz, rtz, perms, abs_obs):
    n, p = rfz.shape
    q = rtz.shape[1]
    n_perm = perms.shape[0]
    null_max = np.zeros(n_perm, dtype=np.float64)
    exceed = np.zeros((p, q), dtype=np.int64)
    for k in range(n_perm):
        m = 0.0
        for jp in range(p):
            for jq in range(q):
                s = 0.0
                for i in range(n):
                    s += rfz[i, jp] * rtz[perms[k, i], jq]
                a = abs(s / n)
                if a > m:
                    m = a
                if a >= abs_obs[jp, jq] - 1e-12:
                    exceed[jp, jq] += 1
        null_max[k] = m
    return null_max, exceed


def _pearson_1d_impl(a, b):
    n = a.shape[0]
    ma = 0.0
    mb = 0.0
    for i in range(n):
        ma += a[i]
        mb += b[i]
    ma /= n
    mb /= n
    sab = 0.0
    saa = 0.0
    sbb = 0.0
    for i in range(n):
        da = a[i] - ma
        db = b[i] - mb
        sab += da * db
        saa += da * da
        sbb += db * db
    if saa <= 0.0 or sbb <= 0.0:
        return np.nan
    r = sab / np.sqrt(saa * sbb)
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    return r


def _bootstrap_spearman_impl(x, y, idx):
    n_boot, n = idx.shape
    out = np.empty(n_boot, dtype=np.float64)
    xa = np.empty(n, dtype=np.float64)
    ya = np.empty(n, dtype=np.float64)
    for b in range(n_boot):
        for i in range(n):
            xa[i] = x[idx[b, i]]
            ya[i] = y[idx[b, i]]
        rx = _average_ranks_impl(xa.copy())
        ry = _average_ranks_impl(ya.copy())
        out[b] = _pearson_1d_impl(rx, ry)
    return out


def _bootstrap_pearson_impl(x, y, idx):
    n_boot, n = idx.shape
    out = np.empty(n_boot, dtype=np.float64)
    xa = np.empty(n, dtype=np.float64)
    ya = np.empty(n, dtype=np.float64)
    for b in range(n_boot):
        for i in range(n):
            xa[i] = x[idx[b, i]]
            ya[i] = y[idx[b, i]]
        out[b] = _pearson_1d_impl(xa, ya)
    return out


if HAVE_NUMBA:
    _jit = njit(cache=True, fastmath=False)
    # jit the leaf helpers in place first so the dependent kernels pick up
    # the compiled versions when their own compilation resolves the globals
    _average_ranks_impl = _jit(_average_ranks_impl)
    _pearson_1d_impl = _jit(_pearson_1d_impl)
    _average_ranks_nb = _average_ranks_impl
    _rank_columns_nb = _jit(_rank_columns_impl)
    _perm_corr_null_nb = _jit(_perm_corr_null_impl)
    _bootstrap_spearman_nb = _jit(_bootstrap_spearman_impl)
    _bootstrap_pearson_nb = _jit(_bootstrap_pearson_impl)

    def average_ranks_numba(x):
        return _average_ranks_nb(np.ascontiguousarray(x, dtype=np.float64))

    def rank_columns_numba(X):
        return _rank_columns_nb(np.ascontiguousarray(X, dtype=np.float64))

    def perm_corr_null_numba(rfz, rtz, perms, abs_obs):
        return _perm_corr_null_nb(
            np.ascontiguousarray(rfz, dtype=np.float64),
            np.ascontiguousarray(rtz, dtype=np.float64),
            np.ascontiguousarray(perms, dtype=np.int64),
            np.ascontiguousarray(abs_obs, dtype=np.float64),
        )

    def bootstrap_spearman_numba(x, y, idx):
        return _bootstrap_spearman_nb(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(y, dtype=np.float64),
            np.ascontiguousarray(idx, dtype=np.int64),
        )

    def bootstrap_pearson_numba(x, y, idx):
        return _bootstrap_pearson_nb(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(y, dtype=np.float64),
            np.ascontiguousarray(idx, dtype=np.int64),
        )
else:  # pragma: no cover
    average_ranks_numba = None
    rank_columns_numba = None
    perm_corr_null_numba = None
    bootstrap_spearman_numba = None
    bootstrap_pearson_numba = None


if NUMBA_ENABLED:
    average_ranks_kernel = average_ranks_numba
    rank_columns_kernel = rank_columns_numba
    perm_corr_null_kernel = perm_corr_null_numba
    bootstrap_spearman_kernel = bootstrap_spearman_numba
    bootstrap_pearson_kernel = bootstrap_pearson_numba
    BACKEND = "numba"
else:
    average_ranks_kernel = average_ranks_numpy
    rank_columns_kernel = rank_columns_numpy
    perm_corr_null_kernel = perm_corr_null_numpy
    bootstrap_spearman_kernel = bootstrap_spearman_numpy
    bootstrap_pearson_kernel = bootstrap_pearson_numpy
    BACKEND = "numpy"

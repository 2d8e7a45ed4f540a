"""Partial least squares regression via the SIMPLS algorithm.

Covers model fitting on z-scored data, k-fold cross-validated component
selection against a mean-predictor baseline, bootstrap feature-stability
z-scores with sign alignment, and reduced-model refits on the most stable
features. All randomness flows through named substreams of a single seed.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .stats import DegenerateDataError, bootstrap_pearson_ci, _pearson


class PlsError(ValueError):
    pass


@dataclass
class Scaler:
    """Column-wise z-scoring with population (divide-by-n) moments.

    Population moments make standardization invariant under row
    replication. Zero-variance columns are flagged and mapped to 0.
    """

    means: np.ndarray
    sds: np.ndarray
    excluded: np.ndarray      # boolean mask of zero-variance columns

    @classmethod
    def fit(cls, M):
        M = np.asarray(M, dtype=np.float64)
        means = M.mean(axis=0)
        sds = M.std(axis=0)
        return cls(means, sds, sds == 0)

    def transform(self, M):
        M = np.asarray(M, dtype=np.float64)
        sd_safe = np.where(self.excluded, 1.0, self.sds)
        Z = (M - self.means) / sd_safe
        Z[:, self.excluded] = 0.0
        return Z

    def inverse_transform(self, Z):
        sd_safe = np.where(self.excluded, 1.0, self.sds)
        return np.asarray(Z) * sd_safe + self.means


@dataclass
class PlsModel:
    n_components: int
    x_weights: np.ndarray     # p x k, applied to standardized X
    x_loadings: np.ndarray    # p x k
    y_loadings: np.ndarray    # q x k
    beta: np.ndarray          # p x q, standardized space
    x_scaler: Scaler
    y_scaler: Scaler
    feature_names: list
    target_names: list


@dataclass
class CvCurve:
    mse: list                 # index k = 0..k_max; k = 0 is the mean predictor
    folds: int
    seed: int
    selected_k: int

    def pct_change(self, k=None):
        """MSE change of model k relative to the zero-component baseline."""
        if k is None:
            k = self.selected_k
        return 100.0 * (self.mse[k] - self.mse[0]) / self.mse[0]


@dataclass
class StabilityReport:
    z_scores: np.ndarray      # per-feature bootstrap mean/SD of loadings
    ranking: np.ndarray       # feature indices by decreasing |z|
    n_boot: int
    seed: int
    feature_names: list = field(default_factory=list)

    def top(self, m):
        return list(self.ranking[:m])


@dataclass
class PredictionSummary:
    r: np.ndarray             # per-target cross-validated predicted-vs-observed
    r_ci: list                # per-target ConfidenceInterval
    r2: np.ndarray
    in_sample_r: np.ndarray
    mse_change_pct: float
    cv_predictions: np.ndarray


@dataclass
class ReducedModelResult:
    model: PlsModel
    curve: CvCurve
    summary: PredictionSummary
    selected_features: list   # indices into the original feature order


@dataclass
class CombinedModelResult:
    full_curve: CvCurve
    stability: StabilityReport
    reduced: ReducedModelResult


def _simpls_core(X0, Y0, k):
    """SIMPLS on already-standardized matrices. Returns (R, P, Q, T).

    Component signs are fixed so each component's largest-|weight| feature
    carries a positive weight.
    """
    n, p = X0.shape
    q = Y0.shape[1]
    # divide-by-n moments and unit-variance scores keep every fitted matrix
    # invariant under row replication
    S = X0.T @ Y0 / n
    R = np.zeros((p, k))
    P = np.zeros((p, k))
    Q = np.zeros((q, k))
    T = np.zeros((n, k))
    V = np.zeros((p, k))
    for a in range(k):
        if q == 1:
            r = S[:, 0].copy()
        else:
            _, vecs = np.linalg.eigh(S.T @ S)
            r = S @ vecs[:, -1]
        t = X0 @ r
        normt = np.linalg.norm(t) / math.sqrt(n)
        if normt <= 1e-12:
            raise PlsError(
                f"component {a + 1} is degenerate; reduce n_components")
        t /= normt
        r /= normt
        j = int(np.argmax(np.abs(r)))
        if r[j] < 0:
            r = -r
            t = -t
        pa = X0.T @ t / n
        qa = Y0.T @ t / n
        v = pa.copy()
        if a > 0:
            v -= V[:, :a] @ (V[:, :a].T @ pa)
        nv = np.linalg.norm(v)
        if nv <= 1e-12:
            raise PlsError(
                f"component {a + 1} is degenerate; reduce n_components")
        v /= nv
        S = S - np.outer(v, v.T @ S)
        R[:, a] = r
        P[:, a] = pa
        Q[:, a] = qa
        T[:, a] = t
        V[:, a] = v
    return R, P, Q, T


def simpls_fit(X, Y, k, feature_names=None, target_names=None) -> PlsModel:
    """Fit a k-component PLS model; X and Y are z-scored internally."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    q = Y.shape[1]
    if Y.shape[0] != n:
        raise PlsError("X and Y row counts differ")
    if n < 2:
        raise PlsError("need at least 2 rows")
    if not 1 <= k <= min(n - 1, p):
        raise PlsError(f"k={k} outside 1..min(n-1, p)={min(n - 1, p)}")
    y_scaler = Scaler.fit(Y)
    if y_scaler.excluded.any():
        raise PlsError("zero-variance target column")
    x_scaler = Scaler.fit(X)
    X0 = x_scaler.transform(X)
    Y0 = y_scaler.transform(Y)
    R, P, Q, _ = _simpls_core(X0, Y0, k)
    beta = R @ Q.T
    return PlsModel(
        n_components=k,
        x_weights=R, x_loadings=P, y_loadings=Q, beta=beta,
        x_scaler=x_scaler, y_scaler=y_scaler,
        feature_names=list(feature_names) if feature_names is not None
        else [f"f{j}" for j in range(p)],
        target_names=list(target_names) if target_names is not None
        else [f"t{j}" for j in range(q)],
    )


def predict(model: PlsModel, X_new) -> np.ndarray:
    """Predict targets (original units) for new feature rows."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
    if X_new.shape[1] != model.beta.shape[0]:
        raise PlsError(
            f"expected {model.beta.shape[0]} feature columns, "
            f"got {X_new.shape[1]}")
    Z = model.x_scaler.transform(X_new)
    return model.y_scaler.inverse_transform(Z @ model.beta)


def _fold_assignment(n, folds, seed):
    if folds < 2:
        raise PlsError("need at least 2 folds")
    if n < folds:
        raise PlsError("more folds than rows")
    perm = rng.substream(seed, "kfold_cv").permutation(n)
    parts = np.array_split(perm, folds)
    if min(len(p) for p in parts) < 2:
        raise PlsError("a fold would hold fewer than 2 rows")
    return parts


def _cv_mse_matrix(X, Y, k_max, folds, seed, global_scaling=False):
    """Held-out predictions for k = 0..k_max; per-target variance-normalized
    pooled MSE. Returns (mse array, predictions (k_max+1, n, q))."""
    n, p = X.shape
    q = Y.shape[1]
    parts = _fold_assignment(n, folds, seed)
    k_cap = min(k_max, p, min(n - len(part) for part in parts) - 1)
    preds = np.zeros((k_cap + 1, n, q))
    g_x = Scaler.fit(X) if global_scaling else None
    g_y = Scaler.fit(Y) if global_scaling else None
    for held in parts:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        Xtr, Ytr = X[mask], Y[mask]
        x_sc = g_x or Scaler.fit(Xtr)
        y_sc = g_y or Scaler.fit(Ytr)
        if y_sc.excluded.any():
            raise PlsError("zero-variance target column in a training fold")
        X0 = x_sc.transform(Xtr)
        Y0 = y_sc.transform(Ytr)
        R, _, Q, _ = _simpls_core(X0, Y0, k_cap) if k_cap else (None,) * 4
        Zh = x_sc.transform(X[held])
        preds[0, held] = y_sc.inverse_transform(np.zeros((len(held), q)))
        for k in range(1, k_cap + 1):
            beta_k = R[:, :k] @ Q[:, :k].T
            preds[k, held] = y_sc.inverse_transform(Zh @ beta_k)
    var = Y.var(axis=0)
    mse = np.array([
        np.mean(((preds[k] - Y) ** 2) / var) for k in range(k_cap + 1)
    ])
    return mse, preds


def kfold_cv(X, Y, k_max, folds=5, seed=0, global_scaling=False) -> CvCurve:
    """Cross-validated MSE curve and stopping-rule component selection.

    selected_k is the end of the initial strictly-decreasing MSE prefix
    (0 if one component does not improve on the mean predictor). By default
    scalers are refit inside each training fold; global_scaling=True
    standardizes once on the full data instead.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    mse, _ = _cv_mse_matrix(X, Y, k_max, folds, seed, global_scaling)
    selected = 0
    while selected + 1 < len(mse) and mse[selected + 1] < mse[selected]:
        selected += 1
    return CvCurve(mse=mse.tolist(), folds=folds, seed=seed, selected_k=selected)


def bootstrap_stability(X, Y, n_boot=10_000, seed=0,
                        feature_names=None) -> StabilityReport:
    """Bootstrap z-scores of the single-component feature loadings.

    Each resample refits a one-component model; loadings are sign-aligned
    to the full-data loading vector before averaging. z = mean / SD.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    ref = simpls_fit(X, Y, 1).x_loadings[:, 0]
    loadings = np.zeros((n_boot, p))
    max_redraws = 100
    for b in range(n_boot):
        load = None
        for attempt in range(max_redraws):
            stage = "bootstrap_stability" if attempt == 0 else \
                f"bootstrap_stability/redraw{attempt}"
            idx = rng.substream(seed, stage, b).integers(0, n, size=n)
            try:
                load = simpls_fit(X[idx], Y[idx], 1).x_loadings[:, 0]
            except PlsError:
                continue
            break
        if load is None:
            raise DegenerateDataError(
                f"resample {b}: no usable draw after {max_redraws} attempts")
        if load @ ref < 0:
            load = -load
        loadings[b] = load
    mean = loadings.mean(axis=0)
    sd = loadings.std(axis=0, ddof=1)
    z = np.zeros(p)
    ok = sd > 0
    z[ok] = mean[ok] / sd[ok]
    order = np.lexsort((np.arange(p), -np.abs(z)))
    return StabilityReport(
        z_scores=z, ranking=order, n_boot=n_boot, seed=seed,
        feature_names=list(feature_names) if feature_names is not None
        else [f"f{j}" for j in range(p)],
    )


def _prediction_summary(model, curve, X, Y, folds, seed, n_boot_ci,
                        global_scaling=False) -> PredictionSummary:
    q = Y.shape[1]
    k = model.n_components
    _, preds = _cv_mse_matrix(X, Y, k, folds, seed, global_scaling)
    cv_pred = preds[k]
    in_sample = predict(model, X)
    r = np.zeros(q)
    in_r = np.zeros(q)
    cis = []
    for j in range(q):
        r[j] = _pearson(cv_pred[:, j], Y[:, j])
        in_r[j] = _pearson(in_sample[:, j], Y[:, j])
        cis.append(bootstrap_pearson_ci(cv_pred[:, j], Y[:, j],
                                        n_boot=n_boot_ci, seed=seed))
    return PredictionSummary(
        r=r, r_ci=cis, r2=r ** 2, in_sample_r=in_r,
        mse_change_pct=curve.pct_change(k),
        cv_predictions=cv_pred,
    )


def reduced_model(X, Y, stability: StabilityReport, m=4, folds=5, seed=0,
                  k_max=10, n_boot_ci=10_000, feature_names=None,
                  target_names=None,
                  global_scaling=False) -> ReducedModelResult:
    """Refit on the m most stable features; report the CV curve and
    cross-validated predicted-vs-observed correlations with bootstrap CIs.

    The fitted model uses max(selected_k, 1) components: a single component
    is retained even when the CV curve shows no MSE reduction.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    p = X.shape[1]
    if not 1 <= m <= p:
        raise PlsError(f"m={m} outside 1..{p}")
    top = stability.top(m)
    Xr = X[:, top]
    names = list(feature_names) if feature_names is not None else \
        stability.feature_names
    curve = kfold_cv(Xr, Y, k_max=min(k_max, m), folds=folds, seed=seed,
                     global_scaling=global_scaling)
    k = max(curve.selected_k, 1)
    model = simpls_fit(Xr, Y, k,
                       feature_names=[names[j] for j in top],
                       target_names=target_names)
    summary = _prediction_summary(model, curve, Xr, Y, folds, seed, n_boot_ci,
                                  global_scaling)
    return ReducedModelResult(model=model, curve=curve, summary=summary,
                              selected_features=[int(j) for j in top])


def combined_model(X, Y_all, m=5, folds=5, seed=0, k_max=10, n_boot=10_000,
                   n_boot_ci=10_000, feature_names=None, target_names=None,
                   global_scaling=False) -> CombinedModelResult:
    """Joint multi-target pipeline: full-model CV curve, stability from the
    joint single-component fit, and the reduced m-feature refit."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y_all = np.atleast_2d(np.asarray(Y_all, dtype=np.float64))
    full_curve = kfold_cv(X, Y_all, k_max=k_max, folds=folds, seed=seed,
                          global_scaling=global_scaling)
    stability = bootstrap_stability(X, Y_all, n_boot=n_boot, seed=seed,
                                    feature_names=feature_names)
    reduced = reduced_model(X, Y_all, stability, m=m, folds=folds, seed=seed,
                            k_max=k_max, n_boot_ci=n_boot_ci,
                            feature_names=feature_names,
                            target_names=target_names,
                            global_scaling=global_scaling)
    return CombinedModelResult(full_curve=full_curve, stability=stability,
                               reduced=reduced)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: PlsModel) -> dict:
    return {
        "format": "lingmood-pls-model",
        "version": 1,
        "n_components": model.n_components,
        "feature_names": model.feature_names,
        "target_names": model.target_names,
        "x_weights": model.x_weights.tolist(),
        "x_loadings": model.x_loadings.tolist(),
        "y_loadings": model.y_loadings.tolist(),
        "beta": model.beta.tolist(),
        "x_scaler": {
            "means": model.x_scaler.means.tolist(),
            "sds": model.x_scaler.sds.tolist(),
        },
        "y_scaler": {
            "means": model.y_scaler.means.tolist(),
            "sds": model.y_scaler.sds.tolist(),
        },
    }


def model_from_dict(d: dict) -> PlsModel:
    if d.get("format") != "lingmood-pls-model":
        raise PlsError("not a serialized PLS model")

    def scaler(s):
        sds = np.asarray(s["sds"], dtype=np.float64)
        return Scaler(np.asarray(s["means"], dtype=np.float64), sds, sds == 0)

    return PlsModel(
        n_components=int(d["n_components"]),
        x_weights=np.asarray(d["x_weights"], dtype=np.float64),
        x_loadings=np.asarray(d["x_loadings"], dtype=np.float64),
        y_loadings=np.asarray(d["y_loadings"], dtype=np.float64),
        beta=np.asarray(d["beta"], dtype=np.float64),
        x_scaler=scaler(d["x_scaler"]),
        y_scaler=scaler(d["y_scaler"]),
        feature_names=list(d["feature_names"]),
        target_names=list(d["target_names"]),
    )


def save_model(model: PlsModel, path, provenance=None):
    d = model_to_dict(model)
    if provenance:
        d["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> PlsModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

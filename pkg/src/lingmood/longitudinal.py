"""Within-subject generalizability of a group-level model.

Applies a fitted PLS model to each participant's repeated measurements,
correlates predicted with observed scores over time, and pools the
per-participant correlations (Fisher z, one-sample t-test against zero)
for every minimum-assessment threshold.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .corpus import TARGET_NAMES, LongitudinalDataset
from .pls import PlsModel, predict
from .stats import fisher_z, one_sample_t


class WithinSubjectError(ValueError):
    pass


@dataclass
class ParticipantCorrelation:
    participant_id: str
    n_usable: int          # waves with both an assessment and >= 1 record
    r: float               # NaN when undefined (constant series)


@dataclass
class ThresholdRow:
    n_min: int
    n_participants: int
    n_excluded: int        # enough waves but undefined r / zero variance
    testable: bool
    mean_r: float
    ci_lower: float        # 95% CI of the mean, Fisher-z scale back-transformed
    ci_upper: float
    ci_raw_lower: float    # raw-scale alternative
    ci_raw_upper: float
    t: float
    df: int
    p: float


@dataclass
class WithinSubjectReport:
    target: str
    per_participant: list
    thresholds: list

    def row(self, n_min) -> ThresholdRow:
        for row in self.thresholds:
            if row.n_min == n_min:
                return row
        raise KeyError(n_min)


def _participant_correlation(model, participant, feat_idx, target_col,
                             target) -> ParticipantCorrelation:
    by_wave = {}
    for rec in participant.records:
        by_wave.setdefault(rec.index, []).append(rec.values)
    obs, X = [], []
    for a in participant.assessments:
        if a.index not in by_wave:
            continue
        x = np.mean(np.asarray(by_wave[a.index], dtype=np.float64), axis=0)
        X.append(x[feat_idx])
        obs.append(getattr(a, {"phq9": "phq9_total", "gad7": "gad7_total",
                               "suicidality": "suicidality"}[target]))
    n_usable = len(obs)
    if n_usable < 2:
        return ParticipantCorrelation(participant.participant_id, n_usable,
                                      math.nan)
    pred = predict(model, np.asarray(X))[:, target_col]
    obs = np.asarray(obs, dtype=np.float64)
    if np.ptp(obs) == 0 or np.ptp(pred) == 0:
        return ParticipantCorrelation(participant.participant_id, n_usable,
                                      math.nan)
    r = float(np.corrcoef(pred, obs)[0, 1])
    return ParticipantCorrelation(participant.participant_id, n_usable, r)


def within_subject(model: PlsModel, ds: LongitudinalDataset, target: str,
                   n_range=range(3, 19)) -> WithinSubjectReport:
    """Per-participant predicted-vs-observed correlations pooled per
    minimum-assessment threshold."""
    if target not in TARGET_NAMES:
        raise WithinSubjectError(f"unknown target '{target}'")
    if target not in model.target_names:
        raise WithinSubjectError(
            f"model predicts {model.target_names}, not '{target}'")
    target_col = model.target_names.index(target)
    name_pos = {name: j for j, name in enumerate(ds.feature_names)}
    missing = [f for f in model.feature_names if f not in name_pos]
    if missing:
        raise WithinSubjectError(
            f"dataset lacks model features: {missing}")
    feat_idx = np.array([name_pos[f] for f in model.feature_names])

    per_participant = [
        _participant_correlation(model, p, feat_idx, target_col, target)
        for p in ds.participants
    ]

    thresholds = []
    for n_min in n_range:
        eligible = [pc for pc in per_participant if pc.n_usable >= n_min]
        included = [pc for pc in eligible if not math.isnan(pc.r)]
        n_excluded = len(eligible) - len(included)
        rs = np.array([pc.r for pc in included])
        if len(included) < 2:
            thresholds.append(ThresholdRow(
                n_min, len(included), n_excluded, False,
                float(rs.mean()) if len(rs) else math.nan,
                math.nan, math.nan, math.nan, math.nan,
                math.nan, len(included) - 1, math.nan))
            continue
        zs = np.array([fisher_z(r) for r in rs])
        k = len(zs)
        mean_r = float(rs.mean())
        tcrit = sps.t.ppf(0.975, k - 1)
        z_half = tcrit * zs.std(ddof=1) / math.sqrt(k)
        r_half = tcrit * rs.std(ddof=1) / math.sqrt(k)
        if zs.std(ddof=1) > 0:
            t, df, p = one_sample_t(zs)
        else:
            t, df, p = math.nan, k - 1, math.nan
        thresholds.append(ThresholdRow(
            n_min, k, n_excluded, True, mean_r,
            float(np.tanh(zs.mean() - z_half)),
            float(np.tanh(zs.mean() + z_half)),
            mean_r - r_half, mean_r + r_half,
            t, df, p))
    return WithinSubjectReport(target=target, per_participant=per_participant,
                               thresholds=thresholds)

"""Longitudinal dataset model: ingestion, eligibility filtering, aggregation.

Input files are comma-separated UTF-8 text with a header row. Column names
are never hard-coded; a flat ``key=value`` mapping config names every
required column, so the loader survives schema drift in published data.

Two alignment modes pair feature records with assessment waves:

* index mode: both files carry an explicit wave index (1..18);
* fortnight mode: both files carry ISO dates, and a post dated within the
  14 days up to assessment t is attributed to wave t.
"""

import csv
import logging
import statistics
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

log = logging.getLogger(__name__)

TARGET_NAMES = ("phq9", "gad7", "suicidality")
TARGET_RANGES = {"phq9": (0, 27), "gad7": (0, 21), "suicidality": (0, 3)}
MAX_WAVES = 18
FORTNIGHT = timedelta(days=14)


class MappingError(ValueError):
    """Mapping config is incomplete or names a column absent from the file."""


class RowValidationError(ValueError):
    """A data row failed validation; message carries the row number."""


@dataclass(frozen=True)
class Assessment:
    participant_id: str
    index: int
    phq9_total: int
    gad7_total: int
    suicidality: int


@dataclass(frozen=True)
class FeatureRecord:
    participant_id: str
    index: int
    values: tuple


@dataclass
class Participant:
    participant_id: str
    assessments: list
    records: list


@dataclass
class LongitudinalDataset:
    participants: list
    feature_names: list

    @property
    def n_participants(self):
        return len(self.participants)

    @property
    def n_records(self):
        return sum(len(p.records) for p in self.participants)


@dataclass
class ParticipantMeans:
    features: np.ndarray       # n x p
    targets: np.ndarray        # n x 3, columns (phq9, gad7, suicidality)
    participant_ids: list
    feature_names: list
    target_names: tuple = TARGET_NAMES


@dataclass
class CohortSummary:
    n_participants: int
    n_posts: int
    target_stats: dict          # name -> {mean, sd, min, max} of participant means
    assessment_histogram: dict  # waves completed (1..18) -> participant count
    intra_individual_sd: dict   # name -> per-participant SDs (dataset order)
    mean_intra_individual_sd: dict
    sd_convention: str = "population"

    def to_rows(self):
        rows = [("n_participants", self.n_participants),
                ("n_posts", self.n_posts),
                ("sd_convention", self.sd_convention)]
        for name, st in self.target_stats.items():
            for k, v in st.items():
                rows.append((f"{name}_{k}", v))
        for name, v in self.mean_intra_individual_sd.items():
            rows.append((f"{name}_mean_intra_sd", v))
        for waves in sorted(self.assessment_histogram):
            rows.append((f"assessments_{waves}", self.assessment_histogram[waves]))
        return rows


def read_mapping(path) -> dict:
    """Flat key=value config; '#' starts a comment line."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MappingError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
    return mapping


def _read_csv(path):
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    return header, rows


def _require(mapping, key):
    if key not in mapping or not mapping[key]:
        raise MappingError(f"mapping is missing required key '{key}'")
    return mapping[key]


def _col(row, col, rownum, path):
    if col not in row or row[col] is None:
        raise MappingError(f"column '{col}' not found in {path}")
    return row[col]


def _int_score(raw, name, rownum):
    try:
        value = int(float(raw))
    except (TypeError, ValueError):
        raise RowValidationError(f"row {rownum}: {name} value '{raw}' is not numeric")
    lo, hi = TARGET_RANGES[name]
    if not lo <= value <= hi:
        raise RowValidationError(
            f"row {rownum}: {name}={value} outside [{lo}, {hi}]")
    return value


def load_dataset(assessments_file, features_file, mapping) -> LongitudinalDataset:
    """Ingest both files, validate, align waves, apply the eligibility filter.

    Retains exactly the participants with at least one assessment and at
    least one feature record; drop counts are logged.
    """
    if not isinstance(mapping, dict):
        mapping = read_mapping(mapping)

    a_pid = _require(mapping, "assessment_participant")
    f_pid = _require(mapping, "feature_participant")
    score_cols = {name: _require(mapping, name) for name in TARGET_NAMES}
    date_mode = "assessment_date" in mapping or "feature_date" in mapping
    if date_mode:
        a_when = _require(mapping, "assessment_date")
        f_when = _require(mapping, "feature_date")
    else:
        a_when = _require(mapping, "assessment_index")
        f_when = _require(mapping, "feature_index")

    a_header, a_rows = _read_csv(assessments_file)
    f_header, f_rows = _read_csv(features_file)
    for col in [a_pid, a_when, *score_cols.values()]:
        if col not in a_header:
            raise MappingError(f"column '{col}' not found in {assessments_file}")
    for col in [f_pid, f_when]:
        if col not in f_header:
            raise MappingError(f"column '{col}' not found in {features_file}")

    if mapping.get("feature_columns"):
        feature_names = [c.strip() for c in mapping["feature_columns"].split(",")]
        for col in feature_names:
            if col not in f_header:
                raise MappingError(f"column '{col}' not found in {features_file}")
    else:
        feature_names = [c for c in f_header if c not in (f_pid, f_when)]

    assessments = {}
    a_dates = {}
    for rownum, row in enumerate(a_rows, start=2):
        pid = _col(row, a_pid, rownum, assessments_file).strip()
        if date_mode:
            try:
                when = date.fromisoformat(row[a_when].strip())
            except ValueError:
                raise RowValidationError(
                    f"row {rownum}: bad assessment date '{row[a_when]}'")
            index = None
        else:
            try:
                index = int(float(row[a_when]))
            except (TypeError, ValueError):
                raise RowValidationError(
                    f"row {rownum}: bad assessment index '{row[a_when]}'")
            if not 1 <= index <= MAX_WAVES:
                raise RowValidationError(
                    f"row {rownum}: assessment index {index} outside 1..{MAX_WAVES}")
        scores = {name: _int_score(row[col], name, rownum)
                  for name, col in score_cols.items()}
        entry = (index, when if date_mode else None, scores, rownum)
        assessments.setdefault(pid, []).append(entry)

    # in date mode, wave indices follow each participant's date order
    per_pid_assessments = {}
    for pid, entries in assessments.items():
        if date_mode:
            entries.sort(key=lambda e: e[1])
            dates = []
            built = []
            for i, (_, when, scores, rownum) in enumerate(entries, start=1):
                if i > MAX_WAVES:
                    raise RowValidationError(
                        f"row {rownum}: more than {MAX_WAVES} assessments "
                        f"for participant '{pid}'")
                dates.append(when)
                built.append(Assessment(pid, i, scores["phq9"], scores["gad7"],
                                        scores["suicidality"]))
            a_dates[pid] = dates
        else:
            seen = set()
            built = []
            for index, _, scores, rownum in sorted(entries, key=lambda e: e[0]):
                if index in seen:
                    raise RowValidationError(
                        f"row {rownum}: duplicate assessment index {index} "
                        f"for participant '{pid}'")
                seen.add(index)
                built.append(Assessment(pid, index, scores["phq9"], scores["gad7"],
                                        scores["suicidality"]))
        per_pid_assessments[pid] = built

    records = {}
    n_unmappable = 0
    n_unaligned = 0
    for rownum, row in enumerate(f_rows, start=2):
        pid = _col(row, f_pid, rownum, features_file).strip()
        try:
            values = tuple(float(row[c]) for c in feature_names)
        except (TypeError, ValueError):
            n_unmappable += 1
            continue
        if date_mode:
            try:
                when = date.fromisoformat(row[f_when].strip())
            except ValueError:
                n_unmappable += 1
                continue
            index = None
            for i, a_date in enumerate(a_dates.get(pid, []), start=1):
                if a_date - FORTNIGHT < when <= a_date:
                    index = i
                    break
            if index is None:
                n_unaligned += 1
                continue
        else:
            try:
                index = int(float(row[f_when]))
            except (TypeError, ValueError):
                n_unmappable += 1
                continue
        records.setdefault(pid, []).append(FeatureRecord(pid, index, values))

    if n_unmappable:
        log.warning("rejected %d feature rows with unmappable values", n_unmappable)
    if n_unaligned:
        log.warning("dropped %d feature rows outside any fortnight window", n_unaligned)

    participants = []
    n_dropped = 0
    for pid in sorted(set(per_pid_assessments) | set(records)):
        a_list = per_pid_assessments.get(pid, [])
        r_list = sorted(records.get(pid, []), key=lambda r: r.index)
        if a_list and r_list:
            participants.append(Participant(pid, a_list, r_list))
        else:
            n_dropped += 1
    if n_dropped:
        log.info("dropped %d participants failing the eligibility filter", n_dropped)

    return LongitudinalDataset(participants, feature_names)


def participant_means(ds: LongitudinalDataset) -> ParticipantMeans:
    """Average each participant's feature records and assessments."""
    if not ds.participants:
        raise ValueError("dataset has no participants")
    F = np.array([
        np.mean([r.values for r in p.records], axis=0) for p in ds.participants
    ])
    T = np.array([
        [
            statistics.fmean(a.phq9_total for a in p.assessments),
            statistics.fmean(a.gad7_total for a in p.assessments),
            statistics.fmean(a.suicidality for a in p.assessments),
        ]
        for p in ds.participants
    ])
    return ParticipantMeans(F, T, [p.participant_id for p in ds.participants],
                            list(ds.feature_names))


def summarize(ds: LongitudinalDataset) -> CohortSummary:
    """Cohort statistics: spread of participant means, wave-completion
    histogram, intra-individual SDs (population convention)."""
    if not ds.participants:
        raise ValueError("dataset has no participants")
    means = participant_means(ds)
    target_stats = {}
    for k, name in enumerate(TARGET_NAMES):
        col = means.targets[:, k]
        target_stats[name] = {
            "mean": float(col.mean()),
            "sd": float(col.std(ddof=1)) if len(col) > 1 else 0.0,
            "min": float(col.min()),
            "max": float(col.max()),
        }
    histogram = {w: 0 for w in range(1, MAX_WAVES + 1)}
    for p in ds.participants:
        histogram[len(p.assessments)] += 1
    intra = {name: [] for name in TARGET_NAMES}
    for p in ds.participants:
        series = {
            "phq9": [a.phq9_total for a in p.assessments],
            "gad7": [a.gad7_total for a in p.assessments],
            "suicidality": [a.suicidality for a in p.assessments],
        }
        for name in TARGET_NAMES:
            intra[name].append(float(np.std(series[name])))
    return CohortSummary(
        n_participants=ds.n_participants,
        n_posts=ds.n_records,
        target_stats=target_stats,
        assessment_histogram=histogram,
        intra_individual_sd=intra,
        mean_intra_individual_sd={
            name: float(np.mean(v)) for name, v in intra.items()
        },
    )

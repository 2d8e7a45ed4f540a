import numpy as np
import pytest

from lingmood.corpus import (
    MappingError,
    RowValidationError,
    load_dataset,
    participant_means,
    read_mapping,
    summarize,
)

from conftest import make_cohort_files


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


MAPPING = (
    "assessment_participant=pid\nassessment_index=wave\nphq9=phq9\n"
    "gad7=gad7\nsuicidality=sui\nfeature_participant=pid\n"
    "feature_index=wave\n"
)


def two_participant_files(tmp_path):
    a = write(tmp_path, "a.csv",
              "pid,wave,phq9,gad7,sui\n"
              "p1,1,10,5,0\n"
              "p1,2,20,9,1\n"
              "p2,1,7,3,0\n")
    f = write(tmp_path, "f.csv",
              "pid,wave,alpha,beta\n"
              "p1,1,1.0,2.0\n"
              "p1,2,3.0,4.0\n")
    m = write(tmp_path, "m.cfg", MAPPING)
    return a, f, m


def test_eligibility_filter_drops_post_free_participant(tmp_path):
    ds = load_dataset(*two_participant_files(tmp_path))
    assert ds.n_participants == 1
    assert ds.participants[0].participant_id == "p1"
    assert ds.feature_names == ["alpha", "beta"]


def test_empty_features_file_filters_everyone(tmp_path):
    a, _, m = two_participant_files(tmp_path)
    f = write(tmp_path, "empty.csv", "pid,wave,alpha,beta\n")
    ds = load_dataset(a, f, m)
    assert ds.n_participants == 0


def test_missing_column_names_the_column(tmp_path):
    a, f, _ = two_participant_files(tmp_path)
    m = write(tmp_path, "bad.cfg", MAPPING.replace("phq9=phq9", "phq9=PHQ"))
    with pytest.raises(MappingError, match="PHQ"):
        load_dataset(a, f, m)


def test_out_of_range_score_reports_row(tmp_path):
    _, f, m = two_participant_files(tmp_path)
    a = write(tmp_path, "a2.csv",
              "pid,wave,phq9,gad7,sui\np1,1,10,5,0\np1,2,31,5,0\n")
    with pytest.raises(RowValidationError, match="row 3"):
        load_dataset(a, f, m)


def test_unmappable_feature_rows_are_rejected_not_imputed(tmp_path):
    a, _, m = two_participant_files(tmp_path)
    f = write(tmp_path, "f2.csv",
              "pid,wave,alpha,beta\np1,1,1.0,2.0\np1,2,oops,4.0\n")
    ds = load_dataset(a, f, m)
    assert len(ds.participants[0].records) == 1


def test_load_is_idempotent(tmp_path):
    files = two_participant_files(tmp_path)
    assert load_dataset(*files) == load_dataset(*files)


def test_participant_means_values(tmp_path):
    ds = load_dataset(*two_participant_files(tmp_path))
    means = participant_means(ds)
    np.testing.assert_allclose(means.features, [[2.0, 3.0]])
    np.testing.assert_allclose(means.targets, [[15.0, 7.0, 0.5]])
    assert means.target_names == ("phq9", "gad7", "suicidality")


def test_single_assessment_row_is_verbatim(tmp_path):
    a = write(tmp_path, "a.csv", "pid,wave,phq9,gad7,sui\nq,3,12,8,2\n")
    f = write(tmp_path, "f.csv", "pid,wave,alpha,beta\nq,3,5.0,6.0\n")
    m = write(tmp_path, "m.cfg", MAPPING)
    means = participant_means(load_dataset(a, f, m))
    np.testing.assert_allclose(means.targets, [[12.0, 8.0, 2.0]])


def test_means_invariant_to_assessment_order_and_bounded(tmp_path):
    sub = tmp_path / "a"
    sub.mkdir()
    a1, f1, m1 = make_cohort_files(sub, seed=5)
    ds = load_dataset(a1, f1, m1)
    means = participant_means(ds)
    # shuffled copy of the assessments file
    lines = a1.read_text().splitlines()
    shuffled = [lines[0]] + lines[:0:-1]
    a2 = write(tmp_path, "shuffled.csv", "\n".join(shuffled) + "\n")
    means2 = participant_means(load_dataset(a2, f1, m1))
    np.testing.assert_allclose(means.targets, means2.targets)
    # each mean feature lies between that participant's min and max
    for i, p in enumerate(ds.participants):
        vals = np.array([r.values for r in p.records])
        assert (means.features[i] >= vals.min(axis=0) - 1e-12).all()
        assert (means.features[i] <= vals.max(axis=0) + 1e-12).all()


def test_summarize(tmp_path):
    a, f, m = two_participant_files(tmp_path)
    summary = summarize(load_dataset(a, f, m))
    assert summary.n_participants == 1
    assert summary.n_posts == 2
    assert summary.assessment_histogram[2] == 1
    assert sum(summary.assessment_histogram.values()) == summary.n_participants
    # population SD of [10, 20]
    assert summary.intra_individual_sd["phq9"][0] == pytest.approx(5.0)
    assert summary.sd_convention == "population"


def test_summarize_constant_series_sd_zero(tmp_path):
    a = write(tmp_path, "a.csv",
              "pid,wave,phq9,gad7,sui\nr,1,9,4,1\nr,2,9,4,1\n")
    f = write(tmp_path, "f.csv", "pid,wave,alpha,beta\nr,1,0.0,0.0\n")
    m = write(tmp_path, "m.cfg", MAPPING)
    summary = summarize(load_dataset(a, f, m))
    assert summary.intra_individual_sd["phq9"][0] == 0.0


def test_fortnight_window_alignment(tmp_path):
    a = write(tmp_path, "a.csv",
              "pid,when,phq9,gad7,sui\n"
              "p1,2020-01-15,10,5,0\n"
              "p1,2020-01-29,12,6,1\n")
    f = write(tmp_path, "f.csv",
              "pid,posted,alpha\n"
              "p1,2020-01-10,1.0\n"     # wave 1
              "p1,2020-01-20,2.0\n"     # wave 2
              "p1,2019-12-01,9.0\n")    # outside every window, dropped
    m = write(tmp_path, "m.cfg",
              "assessment_participant=pid\nassessment_date=when\n"
              "phq9=phq9\ngad7=gad7\nsuicidality=sui\n"
              "feature_participant=pid\nfeature_date=posted\n")
    ds = load_dataset(a, f, m)
    recs = ds.participants[0].records
    assert [(r.index, r.values[0]) for r in recs] == [(1, 1.0), (2, 2.0)]


def test_read_mapping_rejects_garbage(tmp_path):
    path = write(tmp_path, "m.cfg", "this is not a mapping\n")
    with pytest.raises(MappingError):
        read_mapping(path)

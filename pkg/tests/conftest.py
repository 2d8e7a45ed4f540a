import numpy as np
import pytest


def make_cohort_files(tmp_path, n_participants=8, waves=6, p=4, seed=0,
                      slope=None, noise=0.5):
    """Synthetic assessments/features CSV pair plus mapping config.

    Targets follow a linear function of the first feature with the given
    slope (per-participant array or scalar); scores are clipped into range.
    """
    rng = np.random.default_rng(seed)
    if slope is None:
        slope = np.full(n_participants, 3.0)
    elif np.isscalar(slope):
        slope = np.full(n_participants, float(slope))
    a_lines = ["pid,wave,phq9,gad7,sitotal"]
    f_lines = ["pid,wave," + ",".join(f"feat{j}" for j in range(p))]
    for i in range(n_participants):
        pid = f"P{i:02d}"
        for w in range(1, waves + 1):
            x = rng.normal(size=p)
            base = slope[i] * x[0] + rng.normal() * noise
            phq = int(np.clip(round(13 + 2 * base), 0, 27))
            gad = int(np.clip(round(10 + 1.5 * base), 0, 21))
            sui = int(np.clip(round(1 + 0.5 * base), 0, 3))
            a_lines.append(f"{pid},{w},{phq},{gad},{sui}")
            f_lines.append(f"{pid},{w}," + ",".join(f"{v:.6f}" for v in x))
    a_path = tmp_path / "assessments.csv"
    f_path = tmp_path / "features.csv"
    m_path = tmp_path / "mapping.cfg"
    a_path.write_text("\n".join(a_lines) + "\n", encoding="utf-8")
    f_path.write_text("\n".join(f_lines) + "\n", encoding="utf-8")
    m_path.write_text(
        "assessment_participant=pid\n"
        "assessment_index=wave\n"
        "phq9=phq9\n"
        "gad7=gad7\n"
        "suicidality=sitotal\n"
        "feature_participant=pid\n"
        "feature_index=wave\n",
        encoding="utf-8",
    )
    return a_path, f_path, m_path


@pytest.fixture
def cohort_files(tmp_path):
    return make_cohort_files(tmp_path)

"""Batch command-line front end.

Subcommands mirror the analysis stages: ``extract`` (lexicon features for
new text), ``between`` (mass-bivariate screen with permutation FWER control
and bootstrap CIs), ``pls`` (group-level regression models), ``within``
(within-subject generalizability), ``report`` (consolidated summary).

Every command is deterministic given (inputs, config, seed); all outputs
are UTF-8 delimited text. Exit code 0 unless a validation error occurred.
"""

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus, lexicon, pls, stats
from .corpus import TARGET_NAMES, MappingError, RowValidationError
from .lexicon import LexiconError
from .longitudinal import WithinSubjectError, within_subject
from .pls import PlsError
from .stats import DegenerateDataError

DEFAULTS = {
    "alpha": 0.05,
    "n_perm": 10_000,
    "n_boot": 10_000,
    "folds": 5,
    "k_max": 10,
    "m": 4,
    "m_combined": 5,
    "seed": 0,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    assessments: str
    features: str
    mapping: str
    out: str
    alpha: float = DEFAULTS["alpha"]
    n_perm: int = DEFAULTS["n_perm"]
    n_boot: int = DEFAULTS["n_boot"]
    folds: int = DEFAULTS["folds"]
    k_max: int = DEFAULTS["k_max"]
    m: int = DEFAULTS["m"]
    m_combined: int = DEFAULTS["m_combined"]
    seed: int = DEFAULTS["seed"]
    global_scaling: bool = False

    def validate(self):
        for name in ("assessments", "features", "mapping"):
            path = getattr(self, name)
            if not path:
                raise ConfigError(f"config field '{name}' is required")
            if not Path(path).is_file():
                raise ConfigError(f"config field '{name}': no such file {path}")
        if not 0 < self.alpha < 1:
            raise ConfigError("config field 'alpha' must be in (0, 1)")
        for name in ("n_perm", "n_boot", "folds", "k_max", "m", "m_combined"):
            if getattr(self, name) < 1:
                raise ConfigError(f"config field '{name}' must be >= 1")


def load_config(args) -> RunConfig:
    values = dict(DEFAULTS)
    values.update({"assessments": "", "features": "", "mapping": "",
                   "out": "out", "global_scaling": False})
    if args.config:
        raw = corpus.read_mapping(args.config)
        base = Path(args.config).parent
        for key, val in raw.items():
            if key not in values:
                raise ConfigError(f"unknown config key '{key}'")
            if key in ("alpha",):
                values[key] = float(val)
            elif key in ("global_scaling",):
                values[key] = val.lower() in ("1", "true", "yes")
            elif key in ("assessments", "features", "mapping", "out"):
                values[key] = str((base / val).resolve()) if val else val
            else:
                values[key] = int(val)
    for key in ("alpha", "n_perm", "n_boot", "folds", "k_max", "m",
                "m_combined", "seed", "out", "assessments", "features",
                "mapping"):
        override = getattr(args, key, None)
        if override is not None:
            values[key] = override
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _fmt(value):
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return format(value, ".10g")
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load_means(cfg):
    ds = corpus.load_dataset(cfg.assessments, cfg.features, cfg.mapping)
    if not ds.participants:
        raise RowValidationError("dataset has no eligible participants")
    return ds, corpus.participant_means(ds)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_extract(args):
    lex = lexicon.compile_lexicon_file(args.lexicon)
    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        raise ConfigError(f"corpus directory not found: {args.corpus}")
    rows = []
    for doc in sorted(corpus_dir.iterdir()):
        if not doc.is_file():
            continue
        try:
            text = doc.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            print(f"extract: skipping {doc.name}: {exc}", file=sys.stderr)
            continue
        res = lexicon.extract(text, lex)
        rows.append([doc.name, res.word_count, res.words_per_sentence,
                     res.dictionary_coverage, *res.category_percent])
    header = ["document", "word_count", "words_per_sentence",
              "dictionary_coverage", *lex.category_names]
    write_csv(args.out, header, rows)
    print(f"extract: wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_between(args):
    cfg = load_config(args)
    out = Path(cfg.out)
    _, means = _load_means(cfg)
    report = stats.max_stat_permutation(
        means.features, means.targets, n_perm=cfg.n_perm, alpha=cfg.alpha,
        seed=cfg.seed)
    lower, upper = stats.bootstrap_rho_ci_matrix(
        means.features, means.targets, n_boot=cfg.n_boot, seed=cfg.seed)
    rows = []
    p, q = report.rho.shape
    for j in range(p):
        for k in range(q):
            rows.append([
                means.feature_names[j], means.target_names[k],
                float(report.rho[j, k]), float(lower[j, k]),
                float(upper[j, k]), float(report.p_uncorr[j, k]),
                float(report.p_corr[j, k]),
                int(abs(report.rho[j, k]) > report.critical_value),
            ])
    write_csv(out / "table2.csv",
              ["feature", "target", "rho", "ci_lower", "ci_upper",
               "p_uncorr", "p_corr", "significant"], rows)
    write_csv(out / "null_max_stats.csv", ["permutation", "max_abs_rho"],
              list(enumerate(report.null_max_stats.tolist())))
    write_csv(out / "between_summary.csv", ["key", "value"],
              [["critical_value", float(report.critical_value)],
               ["alpha", cfg.alpha], ["n_perm", report.n_perm],
               ["seed", cfg.seed],
               ["n_significant", int(report.significant_mask().sum())]])
    print(f"between: critical |rho| = {report.critical_value:.4f}, "
          f"{int(report.significant_mask().sum())} significant comparisons")
    return 0


def _cv_rows(curve):
    return [[k, curve.mse[k], curve.pct_change(k)]
            for k in range(len(curve.mse))]


def _save_scatter(path, observed, cv_pred, target):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "lingmood"
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(observed, cv_pred, s=18)
    ax.set_xlabel(f"observed {target}")
    ax.set_ylabel(f"predicted {target}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_pls(args):
    cfg = load_config(args)
    out = Path(cfg.out)
    _, means = _load_means(cfg)
    F = means.features
    summary_rows = []
    for k_t, target in enumerate(TARGET_NAMES):
        y = means.targets[:, k_t]
        full_curve = pls.kfold_cv(F, y, k_max=cfg.k_max, folds=cfg.folds,
                                  seed=cfg.seed,
                                  global_scaling=cfg.global_scaling)
        stability = pls.bootstrap_stability(F, y, n_boot=cfg.n_boot,
                                            seed=cfg.seed,
                                            feature_names=means.feature_names)
        reduced = pls.reduced_model(F, y, stability, m=cfg.m, folds=cfg.folds,
                                    seed=cfg.seed, k_max=cfg.k_max,
                                    n_boot_ci=cfg.n_boot,
                                    target_names=[target],
                                    global_scaling=cfg.global_scaling)
        full_model = pls.simpls_fit(F, y, max(full_curve.selected_k, 1),
                                    feature_names=means.feature_names,
                                    target_names=[target])

        write_csv(out / f"cv_curve_full_{target}.csv",
                  ["k", "mse", "mse_change_pct"], _cv_rows(full_curve))
        write_csv(out / f"cv_curve_reduced_{target}.csv",
                  ["k", "mse", "mse_change_pct"], _cv_rows(reduced.curve))
        write_csv(out / f"stability_{target}.csv",
                  ["rank", "feature", "z_score"],
                  [[i + 1, means.feature_names[j], float(stability.z_scores[j])]
                   for i, j in enumerate(stability.ranking)])
        write_csv(out / f"predicted_vs_observed_{target}.csv",
                  ["participant", "observed", "cv_predicted"],
                  [[pid, float(y[i]), float(reduced.summary.cv_predictions[i, 0])]
                   for i, pid in enumerate(means.participant_ids)])
        prov = {"seed": cfg.seed, "folds": cfg.folds, "n_boot": cfg.n_boot}
        pls.save_model(full_model, out / f"model_full_{target}.json", prov)
        pls.save_model(reduced.model, out / f"model_reduced_{target}.json", prov)
        if args.plots:
            _save_scatter(out / f"predicted_vs_observed_{target}.svg",
                          y, reduced.summary.cv_predictions[:, 0], target)
        ci = reduced.summary.r_ci[0]
        summary_rows.append([
            target, full_curve.selected_k, full_curve.pct_change(),
            ";".join(reduced.model.feature_names),
            reduced.curve.selected_k, reduced.summary.mse_change_pct,
            float(reduced.summary.r[0]), ci.lower, ci.upper,
            float(reduced.summary.r2[0]), float(reduced.summary.in_sample_r[0]),
        ])
    write_csv(out / "pls_summary.csv",
              ["target", "full_selected_k", "full_mse_change_pct",
               "reduced_features", "reduced_selected_k",
               "reduced_mse_change_pct", "r_cv", "r_ci_lower", "r_ci_upper",
               "r2", "r_in_sample"], summary_rows)

    combined = pls.combined_model(
        F, means.targets, m=cfg.m_combined, folds=cfg.folds, seed=cfg.seed,
        k_max=cfg.k_max, n_boot=cfg.n_boot, n_boot_ci=cfg.n_boot,
        feature_names=means.feature_names, target_names=list(TARGET_NAMES),
        global_scaling=cfg.global_scaling)
    write_csv(out / "cv_curve_full_combined.csv",
              ["k", "mse", "mse_change_pct"], _cv_rows(combined.full_curve))
    write_csv(out / "cv_curve_reduced_combined.csv",
              ["k", "mse", "mse_change_pct"], _cv_rows(combined.reduced.curve))
    write_csv(out / "stability_combined.csv",
              ["rank", "feature", "z_score"],
              [[i + 1, means.feature_names[j],
                float(combined.stability.z_scores[j])]
               for i, j in enumerate(combined.stability.ranking)])
    pls.save_model(combined.reduced.model, out / "model_reduced_combined.json",
                   {"seed": cfg.seed, "folds": cfg.folds, "n_boot": cfg.n_boot})
    write_csv(out / "pls_combined_summary.csv",
              ["target", "r_cv", "r2"],
              [[t, float(combined.reduced.summary.r[j]),
                float(combined.reduced.summary.r2[j])]
               for j, t in enumerate(TARGET_NAMES)])
    print("pls: per-target r_cv = "
          + ", ".join(f"{row[0]}={row[6]:.3f}" for row in summary_rows))
    return 0


def cmd_within(args):
    cfg = load_config(args)
    out = Path(cfg.out)
    models_dir = Path(args.models) if args.models else out
    ds, _ = _load_means(cfg)
    n_range = range(args.n_min, args.n_max + 1)
    ran = 0
    for target in TARGET_NAMES:
        for variant in ("full", "reduced"):
            model_path = models_dir / f"model_{variant}_{target}.json"
            if not model_path.is_file():
                print(f"within: no {model_path.name}, skipping",
                      file=sys.stderr)
                continue
            model = pls.load_model(model_path)
            report = within_subject(model, ds, target, n_range=n_range)
            write_csv(
                out / f"within_{variant}_{target}.csv",
                ["n_min", "n_participants", "n_excluded", "testable",
                 "mean_r", "ci_lower", "ci_upper", "ci_raw_lower",
                 "ci_raw_upper", "t", "df", "p"],
                [[r.n_min, r.n_participants, r.n_excluded, int(r.testable),
                  r.mean_r, r.ci_lower, r.ci_upper, r.ci_raw_lower,
                  r.ci_raw_upper, r.t, r.df, r.p]
                 for r in report.thresholds])
            write_csv(
                out / f"within_participants_{variant}_{target}.csv",
                ["participant", "n_usable", "r"],
                [[pc.participant_id, pc.n_usable, pc.r]
                 for pc in report.per_participant])
            ran += 1
    print(f"within: wrote reports for {ran} model/target pairs")
    return 0


def cmd_report(args):
    cfg = load_config(args)
    out = Path(cfg.out)
    ds, _ = _load_means(cfg)
    summary = corpus.summarize(ds)
    write_csv(out / "cohort_summary.csv", ["key", "value"], summary.to_rows())

    lines = ["lingmood analysis summary", "=" * 25, ""]
    lines.append(f"participants: {summary.n_participants}, "
                 f"posts: {summary.n_posts}")
    for name, st in summary.target_stats.items():
        lines.append(
            f"{name}: mean {st['mean']:.2f}, SD {st['sd']:.2f}, "
            f"range {st['min']:.1f}-{st['max']:.1f}, "
            f"mean intra-individual SD "
            f"{summary.mean_intra_individual_sd[name]:.2f}")
    lines.append("")
    expected = ["between_summary.csv", "table2.csv", "pls_summary.csv",
                "pls_combined_summary.csv"]
    expected += [f"within_reduced_{t}.csv" for t in TARGET_NAMES]
    for name in expected:
        path = out / name
        if path.is_file():
            lines.append(f"present: {name}")
        else:
            lines.append(f"missing: {name} (stage not run)")
    bet = out / "between_summary.csv"
    if bet.is_file():
        with open(bet, encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if row and row[0] in ("critical_value", "n_significant"):
                    lines.append(f"between {row[0]}: {row[1]}")
    text = "\n".join(lines) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------

def _add_config_args(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--assessments")
    sub.add_argument("--features")
    sub.add_argument("--mapping")
    sub.add_argument("--out")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--n-perm", dest="n_perm", type=int)
    sub.add_argument("--n-boot", dest="n_boot", type=int)
    sub.add_argument("--folds", type=int)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--k-max", dest="k_max", type=int)
    sub.add_argument("--m", type=int)
    sub.add_argument("--m-combined", dest="m_combined", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lingmood",
        description="Lexicon features and resampling statistics for "
                    "longitudinal mood data")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract", help="lexicon features for a text corpus")
    p.add_argument("--corpus", required=True, help="directory of UTF-8 documents")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("between", help="mass-bivariate permutation screen")
    _add_config_args(p)
    p.set_defaults(func=cmd_between)

    p = subs.add_parser("pls", help="group-level PLS models")
    _add_config_args(p)
    p.add_argument("--plots", action="store_true",
                   help="also write SVG predicted-vs-observed scatters")
    p.set_defaults(func=cmd_pls)

    p = subs.add_parser("within", help="within-subject generalizability")
    _add_config_args(p)
    p.add_argument("--models", help="directory holding serialized models "
                                    "(default: the output directory)")
    p.add_argument("--n-min", dest="n_min", type=int, default=3)
    p.add_argument("--n-max", dest="n_max", type=int, default=18)
    p.set_defaults(func=cmd_within)

    p = subs.add_parser("report", help="consolidated summary of all outputs")
    _add_config_args(p)
    p.set_defaults(func=cmd_report)
    return parser


VALIDATION_ERRORS = (ConfigError, MappingError, RowValidationError,
                     LexiconError, PlsError, WithinSubjectError,
                     DegenerateDataError, OSError)


def main(argv=None):
    args = build_parser().parse_args(argv)
    # propagate config fields that some subcommands do not define
    for name in ("assessments", "features", "mapping", "out", "seed", "n_perm",
                 "n_boot", "folds", "alpha", "k_max", "m", "m_combined",
                 "config"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

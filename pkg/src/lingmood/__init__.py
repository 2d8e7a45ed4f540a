"""Lexicon-based linguistic features and resampling statistics for
longitudinal mood data."""

from .corpus import (
    Assessment,
    CohortSummary,
    FeatureRecord,
    LongitudinalDataset,
    ParticipantMeans,
    load_dataset,
    participant_means,
    read_mapping,
    summarize,
)
from .lexicon import ExtractionResult, Lexicon, compile_lexicon, extract, tokenize
from .longitudinal import WithinSubjectReport, within_subject
from .pls import (
    CvCurve,
    PlsModel,
    Scaler,
    StabilityReport,
    bootstrap_stability,
    combined_model,
    kfold_cv,
    load_model,
    predict,
    reduced_model,
    save_model,
    simpls_fit,
)
from .stats import (
    ConfidenceInterval,
    PermutationReport,
    average_ranks,
    bootstrap_pearson_ci,
    bootstrap_rho_ci,
    fisher_z,
    mass_bivariate,
    max_stat_permutation,
    one_sample_t,
    spearman,
)

__version__ = "0.1.0"

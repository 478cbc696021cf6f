"""eegconn: functional-connectivity matrices + a small from-scratch CNN for
two-class classification of multichannel time-series cohorts.

Pipeline: recordings -> connectivity matrices (Pearson / Spearman / binarized
pairwise Granger) or raw-series images -> tuned or fixed CNN -> nested
cross-validated ROC/AUC evaluation, with random-search / hyperband / Bayesian
hyperparameter optimization.
"""

__version__ = "0.1.0"

from .connectivity import (
    BicLag,
    ConnectivityMatrix,
    FixedLag,
    VarFit,
    fit_var_pair,
    granger_matrix,
    pearson_matrix,
    rank_transform,
    select_lag,
    spearman_matrix,
)
from .crossval import (
    EvalReport,
    FoldPlan,
    TrainSettings,
    TunerBudgets,
    nested_cv,
    stratified_folds,
)
from .errors import ConfigError, DataError, EegConnError, NumericError
from .features import FeatureConfig, featurize_cohort
from .metrics import (
    ConfusionCounts,
    RocCurve,
    confusion,
    micro_macro_auc,
    precision_recall_accuracy,
    roc_auc,
)
from .recording import Cohort, Recording, load_manifest, load_recording, window, zscore
from .synthgen import (
    CohortSpec,
    VarNetworkSpec,
    generate_cohort,
    ground_truth_delta,
    preset,
    simulate_var,
)
from .tuning import (
    HyperParams,
    SearchSpace,
    Trial,
    bayes_opt,
    hyperband,
    random_search,
    sample,
)

__all__ = [
    "BicLag",
    "Cohort",
    "CohortSpec",
    "ConfigError",
    "ConfusionCounts",
    "ConnectivityMatrix",
    "DataError",
    "EegConnError",
    "EvalReport",
    "FeatureConfig",
    "FixedLag",
    "FoldPlan",
    "HyperParams",
    "NumericError",
    "Recording",
    "RocCurve",
    "SearchSpace",
    "TrainSettings",
    "Trial",
    "TunerBudgets",
    "VarFit",
    "VarNetworkSpec",
    "bayes_opt",
    "confusion",
    "featurize_cohort",
    "fit_var_pair",
    "generate_cohort",
    "granger_matrix",
    "ground_truth_delta",
    "hyperband",
    "load_manifest",
    "load_recording",
    "micro_macro_auc",
    "nested_cv",
    "pearson_matrix",
    "precision_recall_accuracy",
    "preset",
    "random_search",
    "rank_transform",
    "roc_auc",
    "sample",
    "select_lag",
    "simulate_var",
    "spearman_matrix",
    "stratified_folds",
    "window",
    "zscore",
]

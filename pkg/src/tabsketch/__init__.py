"""Context summarization for in-context tabular classification.

Shrink a labelled table to at most n_max rows and d_max columns (sketching
plus feature reduction), feed the compact context to a pluggable classifier,
and benchmark method grids with paired significance reports.
"""

from .backend import BackendSpec, Prediction, accuracy, predict, predict_bridge, predict_knn
from .bench import (
    BestCombo,
    ComparisonReport,
    CurvePoint,
    EvalRecord,
    GridSpec,
    best_combo,
    compare_backends,
    filter_records,
    load_records,
    normalized_curves,
    run_grid,
)
from .dataset import Dataset, FoldSplit, load_csv, pct_seen, stratified_folds, write_csv
from .errors import (
    BackendError,
    BridgeLabelError,
    BridgeLaunchError,
    BridgeProtocolError,
    BridgeRemoteError,
    BridgeTimeoutError,
    DataError,
    QuotaError,
    TabsketchError,
)
from .featsel import (
    FeatureTransform,
    apply,
    fit_mutual_info,
    fit_pca,
    fit_random,
    mutual_information,
    transform_from_dict,
)
from .seeding import derive_seed, derived_rng
from .sketch import (
    ClassQuota,
    compute_quota,
    sketch_coreset,
    sketch_kmeans,
    sketch_random,
)
from .stats import HolmReport, WilcoxonResult, holm_bonferroni, wilcoxon_signed_rank
from .summarize import CompactContext, SummaryPlan, summarize, transform_test

__version__ = "0.1.0"

__all__ = [
    "BackendSpec", "Prediction", "accuracy", "predict", "predict_bridge",
    "predict_knn", "BestCombo", "ComparisonReport", "CurvePoint", "EvalRecord",
    "GridSpec", "best_combo", "compare_backends", "filter_records",
    "load_records", "normalized_curves", "run_grid", "Dataset", "FoldSplit",
    "load_csv", "pct_seen", "stratified_folds", "write_csv", "BackendError",
    "BridgeLabelError", "BridgeLaunchError", "BridgeProtocolError",
    "BridgeRemoteError", "BridgeTimeoutError", "DataError", "QuotaError",
    "TabsketchError", "FeatureTransform", "apply", "fit_mutual_info", "fit_pca",
    "fit_random", "mutual_information", "transform_from_dict", "derive_seed",
    "derived_rng", "ClassQuota", "compute_quota", "sketch_coreset",
    "sketch_kmeans", "sketch_random", "HolmReport", "WilcoxonResult",
    "holm_bonferroni", "wilcoxon_signed_rank", "CompactContext", "SummaryPlan",
    "summarize", "transform_test",
]

"""Merit-score feature subset selection for multivariate time-series classification."""

from .dataset import CsvSchema, Dataset, DatasetFormatError, Sample, load_csv, load_ts, load_uea, merge, write_csv, write_ts
from .dtw import (
    CacheError,
    CacheMissError,
    CorruptCacheError,
    DistanceCache,
    DistanceMatrix,
    StaleCacheError,
    build_distance_matrices,
    build_distance_matrix,
    cache_load,
    cache_store,
    cross_dtw,
    dtw_distance,
    pairwise_dtw,
)
from .estimator import KNeighborsDTW, MSTSSelector
from .infotheory import ContingencyTable, ami, entropy, expected_mi, joint_entropy, mutual_information
from .knn_cv import CrossValidator, FoldAssignment, PredictionVector, accuracy, cv_predict, make_folds, subset_distance
from .merit import (
    CorrelationTable,
    FeatureSubset,
    MeritDomainError,
    MeritScore,
    build_correlations,
    enumerate_subsets,
    merit_score,
    merit_value,
    n_subsets,
    score_all,
)
from .selection import (
    STRATEGIES,
    EvaluationContext,
    SelectionResult,
    SubsetEvaluation,
    exhaustive,
    run_strategy,
    strategy1,
    strategy2,
)

__version__ = "0.1.0"

__all__ = [
    "CsvSchema", "Dataset", "DatasetFormatError", "Sample", "load_csv", "load_ts", "load_uea", "merge",
    "write_csv", "write_ts",
    "CacheError", "CacheMissError", "CorruptCacheError", "DistanceCache", "DistanceMatrix", "StaleCacheError",
    "build_distance_matrices", "build_distance_matrix", "cache_load", "cache_store", "cross_dtw", "dtw_distance",
    "pairwise_dtw",
    "KNeighborsDTW", "MSTSSelector",
    "ContingencyTable", "ami", "entropy", "expected_mi", "joint_entropy", "mutual_information",
    "CrossValidator", "FoldAssignment", "PredictionVector", "accuracy", "cv_predict", "make_folds", "subset_distance",
    "CorrelationTable", "FeatureSubset", "MeritDomainError", "MeritScore", "build_correlations", "enumerate_subsets",
    "merit_score", "merit_value", "n_subsets", "score_all",
    "STRATEGIES", "EvaluationContext", "SelectionResult", "SubsetEvaluation", "exhaustive", "run_strategy",
    "strategy1", "strategy2",
]

"""Correlation tables from single-feature predictions, and subset merit scores.

Correlations are AMI scores computed on out-of-fold class predictions, not on
the series themselves: ``cf[f]`` compares feature ``f``'s predictions with the
true labels and ``ff[f, g]`` compares two features' predictions. A subset of
``k`` features scores

    k * mean(cf) / sqrt(k + k (k - 1) * mean(ff over unordered pairs))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .infotheory import ami
from .knn_cv import PredictionVector

# merit values are compared after rounding to this many decimals
TIE_DECIMALS = 12


class MeritDomainError(ValueError):
    """The merit denominator's radicand is not positive."""


@dataclass(frozen=True, order=True)
class FeatureSubset:
    features: tuple[int, ...]

    def __post_init__(self):
        features = tuple(sorted(int(f) for f in self.features))
        if not features:
            raise ValueError("a feature subset must be non-empty")
        if len(set(features)) != len(features):
            raise ValueError(f"duplicate feature ids in {self.features}")
        if features[0] < 0:
            raise ValueError("feature ids must be non-negative")
        object.__setattr__(self, "features", features)

    @classmethod
    def of(cls, features: Iterable[int]) -> "FeatureSubset":
        return cls(tuple(features))

    @property
    def k(self) -> int:
        return len(self.features)

    @property
    def label(self) -> str:
        """1-based display name, e.g. ``"F1,F3"`` for features (0, 2)."""
        return ",".join(f"F{f + 1}" for f in self.features)

    def __iter__(self):
        return iter(self.features)

    def __len__(self):
        return len(self.features)


@dataclass(frozen=True)
class MeritScore:
    subset: FeatureSubset
    value: float


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    cf: np.ndarray
    ff: np.ndarray

    def __post_init__(self):
        cf = np.asarray(self.cf, dtype=np.float64)
        ff = np.asarray(self.ff, dtype=np.float64)
        if cf.ndim != 1 or ff.shape != (cf.size, cf.size):
            raise ValueError(f"cf has shape {cf.shape} but ff has shape {ff.shape}")
        object.__setattr__(self, "cf", cf)
        object.__setattr__(self, "ff", ff)

    @property
    def n_features(self) -> int:
        return self.cf.size


def build_correlations(preds: Sequence[PredictionVector], truth) -> CorrelationTable:
    """AMI of each feature's predictions with ``truth`` and with each other.

    ``preds[f]`` must hold the predictions made with feature ``f`` alone. All
    vectors must cover the same samples and come from the same folds.
    """
    truth = np.asarray(truth.y if hasattr(truth, "y") else truth)
    vectors = []
    folds = None
    for f, p in enumerate(preds):
        if isinstance(p, PredictionVector):
            if p.feature_set != (f,):
                raise ValueError(f"prediction vector {f} was made with features {p.feature_set}")
            if folds is None:
                folds = p.fold_assignment
            elif p.fold_assignment != folds:
                raise ValueError(f"prediction vector {f} uses a different fold assignment")
            p = p.predicted
        p = np.asarray(p)
        if p.shape != truth.shape:
            raise ValueError(f"prediction vector {f} has {p.shape[0]} entries for {truth.shape[0]} samples")
        vectors.append(p)
    n = len(vectors)
    cf = np.array([ami(v, truth) for v in vectors])
    # ami(v, v) is 1 for every v, constant vectors included
    ff = np.eye(n)
    for f in range(n):
        for g in range(f + 1, n):
            ff[f, g] = ff[g, f] = ami(vectors[f], vectors[g])
    return CorrelationTable(cf, ff)


def merit_value(k: int, mean_cf: float, mean_ff: float) -> float:
    radicand = k + k * (k - 1) * mean_ff
    if not radicand > 0:
        raise MeritDomainError(
            f"non-positive radicand {radicand!r} for k={k}, mean feature-feature AMI {mean_ff!r}"
        )
    return k * mean_cf / math.sqrt(radicand)


def merit_score(subset, table: CorrelationTable) -> MeritScore:
    if not isinstance(subset, FeatureSubset):
        subset = FeatureSubset.of(subset)
    if subset.features[-1] >= table.n_features:
        raise IndexError(f"subset {subset.features} exceeds {table.n_features} features")
    k = subset.k
    mean_cf = math.fsum(table.cf[f] for f in subset.features) / k
    if k > 1:
        pairs = list(combinations(subset.features, 2))
        mean_ff = math.fsum(table.ff[f, g] for f, g in pairs) / len(pairs)
    else:
        mean_ff = 0.0
    return MeritScore(subset, merit_value(k, mean_cf, mean_ff))


def enumerate_subsets(n_features: int, max_k: int = 4) -> list[FeatureSubset]:
    """All subsets of size 1..max_k, by size then lexicographically."""
    if n_features < 1:
        raise ValueError("n_features must be positive")
    if not 1 <= max_k <= n_features:
        raise ValueError(f"max_k must be in [1, {n_features}], got {max_k}")
    return [FeatureSubset(c) for k in range(1, max_k + 1) for c in combinations(range(n_features), k)]


def n_subsets(n_features: int, max_k: int) -> int:
    return sum(math.comb(n_features, k) for k in range(1, max_k + 1))


def score_all(table: CorrelationTable, max_k: int = 4, subsets: Sequence[FeatureSubset] | None = None) -> list[MeritScore]:
    if subsets is None:
        subsets = enumerate_subsets(table.n_features, max_k)
    return [merit_score(s, table) for s in subsets]


def rank_key(value: float, subset: FeatureSubset):
    """Sort key: higher value first, then fewer features, then lexicographic ids."""
    return (-round(value, TIE_DECIMALS), subset.k, subset.features)

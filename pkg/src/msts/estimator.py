"""scikit-learn compatible front end.

``MSTSSelector`` picks a subset of the series' dimensions and ``transform``
keeps only those. ``KNeighborsDTW`` is the matching 1-NN classifier (summed
per-dimension DTW), so the two chain in a ``Pipeline``::

    Pipeline([("select", MSTSSelector()), ("knn", KNeighborsDTW())])

Inputs are arrays of shape ``(n_samples, n_features, n_timesteps)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_mts_array, check_mts_X_y
from .dataset import Dataset
from .dtw import DistanceCache, build_distance_matrices, cross_dtw
from .selection import STRATEGIES, EvaluationContext, run_strategy


class MSTSSelector(TransformerMixin, BaseEstimator):
    """Select series dimensions by merit score over single-dimension 1-NN-DTW predictions.

    Parameters
    ----------
    strategy : {"merit", "merit-wrapper", "exhaustive"}, default="merit-wrapper"
        ``"merit"`` keeps the highest-merit subset, ``"merit-wrapper"`` runs
        cross-validation on the top ``top_frac`` of subsets by merit, and
        ``"exhaustive"`` cross-validates every subset.
    max_k : int, default=4
        Largest subset size considered; clipped to the number of dimensions.
    top_frac : float, default=0.05
        Fraction of merit-ranked subsets evaluated by ``"merit-wrapper"``.
    n_folds : int, default=3
        Stratified cross-validation folds.
    random_state : int, default=0
        Seed of the fold assignment.
    band : int or None, default=None
        Sakoe-Chiba window for DTW; ``None`` is unconstrained.
    n_jobs : int, default=1
        Worker threads for DTW and subset evaluation.
    cache_dir : str or None, default=None
        Directory for per-dimension distance matrix files.

    Attributes
    ----------
    support_ : ndarray of bool, shape (n_features_in_,)
    subset_ : tuple of int
    result_ : SelectionResult
    merit_scores_ : list of MeritScore or None
        ``None`` for the exhaustive strategy.
    correlations_ : CorrelationTable or None
    distances_ : ndarray of shape (n_features_in_, n_samples, n_samples)
    classes_ : ndarray
    n_features_in_ : int
    """

    def __init__(
        self,
        strategy="merit-wrapper",
        max_k=4,
        top_frac=0.05,
        n_folds=3,
        random_state=0,
        band=None,
        n_jobs=1,
        cache_dir=None,
    ):
        self.strategy = strategy
        self.max_k = max_k
        self.top_frac = top_frac
        self.n_folds = n_folds
        self.random_state = random_state
        self.band = band
        self.n_jobs = n_jobs
        self.cache_dir = cache_dir

    def fit(self, X, y=None):
        if isinstance(X, Dataset):
            dataset = X
            self.classes_ = np.asarray(dataset.class_labels, dtype=object)
        else:
            if y is None:
                raise ValueError("y is required unless X is a Dataset")
            X, y = check_mts_X_y(X, y, ensure_min_samples=2)
            self.classes_, codes = np.unique(y, return_inverse=True)
            dataset = Dataset(X, codes.astype(str), [str(i) for i in range(self.classes_.size)])
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.max_k < 1:
            raise ValueError(f"max_k must be positive, got {self.max_k}")

        cache = None
        if self.cache_dir is not None:
            cache = DistanceCache.for_dataset(self.cache_dir, dataset, band=self.band)
        matrices, _ = build_distance_matrices(dataset, band=self.band, n_jobs=self.n_jobs, cache=cache)
        self.distances_ = np.stack([m.values for m in matrices])

        seed = 0 if self.random_state is None else int(self.random_state)
        ctx = EvaluationContext.build(dataset, self.distances_, self.n_folds, seed, self.n_jobs)
        self.result_, phase = run_strategy(ctx, self.strategy, self.max_k, self.top_frac)
        self.merit_scores_ = None if phase is None else phase.scores
        self.correlations_ = None if phase is None else phase.table

        self.n_features_in_ = dataset.n_features
        self.subset_ = self.result_.chosen.features
        self.support_ = np.zeros(dataset.n_features, dtype=bool)
        self.support_[list(self.subset_)] = True
        return self

    def get_support(self, indices=False):
        check_is_fitted(self, "support_")
        return np.flatnonzero(self.support_) if indices else self.support_.copy()

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = check_mts_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, selector was fitted with {self.n_features_in_}")
        return X[:, self.support_, :]


class KNeighborsDTW(ClassifierMixin, BaseEstimator):
    """1-nearest-neighbour classifier on the sum of per-dimension DTW distances.

    Ties go to the training sample that comes first.
    """

    def __init__(self, band=None, n_jobs=1):
        self.band = band
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_mts_X_y(X, y)
        self.classes_, self._codes = np.unique(y, return_inverse=True)
        self._X = X
        self.n_features_in_ = X.shape[1]
        return self

    def _distances(self, X):
        check_is_fitted(self, "classes_")
        X = check_mts_array(X)
        if X.shape[1:] != self._X.shape[1:]:
            raise ValueError(f"X has per-sample shape {X.shape[1:]}, expected {self._X.shape[1:]}")
        D = cross_dtw(X[:, 0, :], self._X[:, 0, :], band=self.band, n_jobs=self.n_jobs)
        for f in range(1, X.shape[1]):
            D += cross_dtw(X[:, f, :], self._X[:, f, :], band=self.band, n_jobs=self.n_jobs)
        return D

    def predict(self, X):
        return self.classes_[self._codes[np.argmin(self._distances(X), axis=1)]]

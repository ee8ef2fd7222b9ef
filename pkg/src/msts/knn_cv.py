"""1-NN classification over precomputed DTW matrices with stratified k-fold CV.

A feature subset's distance is the plain sum of its per-feature DTW matrices.
Every sample is predicted by its nearest neighbour among samples outside its
own fold (ties go to the lowest sample index), giving one out-of-fold
prediction per sample; accuracy is pooled over all samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .dtw import DistanceMatrix


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    n_folds: int
    fold_of: np.ndarray
    seed: int

    def __eq__(self, other):
        if not isinstance(other, FoldAssignment):
            return NotImplemented
        return self.n_folds == other.n_folds and self.seed == other.seed and np.array_equal(self.fold_of, other.fold_of)

    __hash__ = None

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.n_folds)


def _codes(labels) -> np.ndarray:
    if isinstance(labels, Dataset):
        return labels.label_codes
    _, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes


def make_folds(dataset, n_folds: int = 3, seed: int = 0) -> FoldAssignment:
    """Seeded stratified fold assignment.

    Each class's members are shuffled and the classes are laid end to end;
    position ``p`` in that sequence goes to fold ``p % n_folds``. Every class
    occupies a contiguous run, so per-class and overall fold counts each
    differ by at most one.

    ``dataset`` may be a :class:`Dataset` or a label vector.
    """
    if n_folds < 2:
        raise ValueError(f"n_folds must be at least 2, got {n_folds}")
    codes = _codes(dataset)
    counts = np.bincount(codes)
    small = np.flatnonzero((counts > 0) & (counts < n_folds))
    if small.size:
        raise ValueError(f"class code(s) {small.tolist()} have fewer than {n_folds} members")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(codes == c)) for c in range(counts.size) if counts[c]])
    fold_of = np.empty(codes.size, dtype=np.intp)
    fold_of[order] = np.arange(order.size) % n_folds
    fold_of.flags.writeable = False
    return FoldAssignment(n_folds, fold_of, seed)


def _matrix(matrices, f: int) -> np.ndarray:
    if isinstance(matrices, np.ndarray):
        return matrices[f]
    try:
        m = matrices[f]
    except (KeyError, IndexError):
        raise KeyError(f"no distance matrix for feature {f}") from None
    if isinstance(m, DistanceMatrix):
        if m.feature_index != f:
            raise ValueError(f"matrix at position {f} is for feature {m.feature_index}")
        return m.values
    return np.asarray(m)


def _subset(subset) -> tuple[int, ...]:
    features = tuple(sorted(int(f) for f in subset))
    if not features:
        raise ValueError("feature subset is empty")
    if len(set(features)) != len(features):
        raise ValueError(f"duplicate features in subset {subset}")
    return features


def subset_distance(subset, i: int, j: int, matrices) -> float:
    """Summed DTW distance between samples ``i`` and ``j`` over ``subset``."""
    total = 0.0
    for f in _subset(subset):
        total += float(_matrix(matrices, f)[i, j])
    return total


def subset_distance_matrix(subset, matrices) -> np.ndarray:
    features = _subset(subset)
    out = np.array(_matrix(matrices, features[0]), dtype=np.float64, copy=True)
    for f in features[1:]:
        out += _matrix(matrices, f)
    return out


@dataclass(frozen=True, eq=False)
class PredictionVector:
    feature_set: tuple[int, ...]
    predicted: np.ndarray
    fold_assignment: FoldAssignment
    neighbors: np.ndarray

    def __len__(self):
        return self.predicted.shape[0]


def _fold_penalty(fold_of: np.ndarray) -> np.ndarray:
    same = fold_of[:, None] == fold_of[None, :]
    return np.where(same, np.inf, 0.0)


def nearest_out_of_fold(distances: np.ndarray, fold_of: np.ndarray, penalty: np.ndarray | None = None) -> np.ndarray:
    """Index of each row's nearest neighbour outside its own fold.

    ``argmin`` returns the first minimum, i.e. the lowest sample index.
    ``distances`` is modified in place.
    """
    if penalty is None:
        penalty = _fold_penalty(fold_of)
    distances += penalty
    return np.argmin(distances, axis=1)


def cv_predict(dataset: Dataset, subset, matrices, folds: FoldAssignment) -> PredictionVector:
    """Out-of-fold 1-NN predictions for every sample using ``subset``."""
    if folds.fold_of.shape[0] != dataset.n_samples:
        raise ValueError("fold assignment does not match dataset size")
    features = _subset(subset)
    for f in features:
        if not 0 <= f < dataset.n_features:
            raise IndexError(f"feature {f} out of range")
    nn = nearest_out_of_fold(subset_distance_matrix(features, matrices), folds.fold_of)
    return PredictionVector(features, dataset.y[nn], folds, nn)


def accuracy(preds: PredictionVector, dataset) -> float:
    """Pooled fraction of correct out-of-fold predictions."""
    truth = dataset.y if isinstance(dataset, Dataset) else np.asarray(dataset)
    predicted = preds.predicted if isinstance(preds, PredictionVector) else np.asarray(preds)
    if predicted.shape[0] != truth.shape[0]:
        raise ValueError(f"{predicted.shape[0]} predictions for {truth.shape[0]} samples")
    if truth.shape[0] == 0:
        raise ValueError("accuracy of zero samples is undefined")
    return float(np.count_nonzero(predicted == truth)) / truth.shape[0]


class CrossValidator:
    """Repeated subset evaluation over one dataset, fold assignment and matrix stack.

    Holds the stacked matrices and the same-fold penalty so that evaluating a
    subset costs one summation and one ``argmin``.
    """

    def __init__(self, dataset: Dataset, matrices, folds: FoldAssignment):
        self.dataset = dataset
        self.folds = folds
        if isinstance(matrices, np.ndarray):
            stack = np.asarray(matrices, dtype=np.float64)
        else:
            stack = np.stack([_matrix(matrices, f) for f in range(dataset.n_features)])
        if stack.shape != (dataset.n_features, dataset.n_samples, dataset.n_samples):
            raise ValueError(f"matrix stack has shape {stack.shape}")
        self.stack = stack
        self.codes = dataset.label_codes
        self._penalty = _fold_penalty(folds.fold_of)

    def neighbors(self, subset) -> np.ndarray:
        return nearest_out_of_fold(subset_distance_matrix(subset, self.stack), self.folds.fold_of, self._penalty)

    def predict(self, subset) -> PredictionVector:
        features = _subset(subset)
        nn = self.neighbors(features)
        return PredictionVector(features, self.dataset.y[nn], self.folds, nn)

    def accuracy(self, subset) -> float:
        nn = self.neighbors(subset)
        return float(np.count_nonzero(self.codes[nn] == self.codes)) / self.codes.shape[0]

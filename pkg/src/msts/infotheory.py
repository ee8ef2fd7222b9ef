"""Entropy, mutual information and adjusted mutual information of label vectors.

All quantities are empirical (plug-in) estimates from a contingency table, in
nats unless ``base`` is given. Sums go through :func:`math.fsum`, which is
exactly rounded and so independent of summation order; this is what makes
``ami(x, y) == ami(y, x)`` hold bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

# |MI| below this is treated as rounding noise when clamping
_NEG_TOL = 1e-12
_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation of two label vectors (rows: x labels, columns: y labels)."""

    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_labels(cls, x, y) -> "ContingencyTable":
        x = np.asarray(x)
        y = np.asarray(y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"label vectors must be 1-d and of equal length, got {x.shape} and {y.shape}")
        _, xi = np.unique(x, return_inverse=True)
        _, yi = np.unique(y, return_inverse=True)
        r = xi.max() + 1 if xi.size else 0
        c = yi.max() + 1 if yi.size else 0
        counts = np.bincount(xi * c + yi, minlength=r * c).reshape(r, c)
        return cls(counts.astype(np.int64))


def _log(v, base):
    return np.log(v) if base is None else np.log(v) / math.log(base)


def _entropy_from_counts(counts, base=None) -> float:
    counts = np.asarray(counts, dtype=np.float64).ravel()
    counts = counts[counts > 0]
    n = counts.sum()
    p = counts / n
    return max(0.0, -math.fsum((p * _log(p, base)).tolist()))


def _check_pair(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("label vectors must be 1-dimensional")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"label vectors differ in length: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def entropy(labels, base: float | None = None) -> float:
    """Shannon entropy of the empirical label distribution."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("entropy of an empty label vector is undefined")
    _, counts = np.unique(labels, return_counts=True)
    return _entropy_from_counts(counts, base)


def joint_entropy(x, y, base: float | None = None) -> float:
    x, y = _check_pair(x, y)
    if x.size == 0:
        raise ValueError("joint entropy of empty label vectors is undefined")
    return _entropy_from_counts(ContingencyTable.from_labels(x, y).counts, base)


def mutual_information(x, y, base: float | None = None) -> float:
    """``H(X) + H(Y) - H(X, Y)``, clamped at zero."""
    x, y = _check_pair(x, y)
    if x.size == 0:
        raise ValueError("mutual information of empty label vectors is undefined")
    table = ContingencyTable.from_labels(x, y)
    return _mi_from_table(table, base)


def _clamp_mi(mi: float) -> float:
    if mi < 0:
        if mi < -_NEG_TOL:
            raise ArithmeticError(f"mutual information came out negative: {mi}")
        mi = 0.0
    return mi


def _mi_from_table(table: ContingencyTable, base=None) -> float:
    hx = _entropy_from_counts(table.row_sums, base)
    hy = _entropy_from_counts(table.col_sums, base)
    hxy = _entropy_from_counts(table.counts, base)
    return _clamp_mi(hx + hy - hxy)


@lru_cache(maxsize=64)
def _log_factorials(n: int) -> np.ndarray:
    lf = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)  # lf[k] = ln(k!)
    lf.flags.writeable = False
    return lf


def expected_mi(table: ContingencyTable, base: float | None = None) -> float:
    """Expected MI under random permutation with the table's marginals fixed.

    Sums, over every cell and every feasible count ``n_ij`` from
    ``max(1, a_i + b_j - N)`` to ``min(a_i, b_j)``::

        n_ij/N * log(N n_ij / (a_i b_j)) * P_hypergeom(n_ij | a_i, b_j, N)

    Hypergeometric weights come from a log-factorial table, so large ``N``
    does not overflow.
    """
    a = np.asarray(table.row_sums, dtype=np.int64)
    b = np.asarray(table.col_sums, dtype=np.int64)
    a = a[a > 0]
    b = b[b > 0]
    n = int(a.sum())
    if a.size <= 1 or b.size <= 1:
        return 0.0
    lf = _log_factorials(n)

    ai = np.repeat(a, b.size)
    bj = np.tile(b, a.size)
    lo = np.maximum(1, ai + bj - n)
    width = np.minimum(ai, bj) - lo + 1
    keep = width > 0
    if not keep.all():
        ai, bj, lo, width = ai[keep], bj[keep], lo[keep], width[keep]
    # expand every cell into its feasible n_ij values
    starts = np.cumsum(width) - width
    nij = np.arange(int(width.sum())) + np.repeat(lo - starts, width)
    ai = np.repeat(ai, width)
    bj = np.repeat(bj, width)

    # grouped so that swapping rows and columns gives bit-identical terms
    log_p = (
        ((lf[ai] + lf[n - ai]) + (lf[bj] + lf[n - bj]))
        - (lf[n] + lf[nij] + lf[n - ai - bj + nij])
        - (lf[ai - nij] + lf[bj - nij])
    )
    terms = (nij / n) * _log(n * nij / (ai * bj).astype(np.float64), base) * np.exp(log_p)
    return math.fsum(terms.tolist())


def ami(x, y, base: float | None = None) -> float:
    """Adjusted mutual information with the arithmetic-mean normaliser.

    ``(MI - E[MI]) / (mean(H(X), H(Y)) - E[MI])``. Conventions: both vectors
    constant gives 1; exactly one constant gives 0; a denominator below
    1e-12 otherwise gives 0.
    """
    x, y = _check_pair(x, y)
    if x.size == 0:
        raise ValueError("AMI of empty label vectors is undefined")
    table = ContingencyTable.from_labels(x, y)
    r, c = table.counts.shape
    if r == 1 and c == 1:
        return 1.0
    if r == 1 or c == 1:
        return 0.0
    hx = _entropy_from_counts(table.row_sums, base)
    hy = _entropy_from_counts(table.col_sums, base)
    hxy = _entropy_from_counts(table.counts, base)
    mi = _clamp_mi(hx + hy - hxy)
    emi = expected_mi(table, base)
    denom = (hx + hy) / 2 - emi
    if abs(denom) < _DENOM_TOL:
        return 0.0
    return (mi - emi) / denom

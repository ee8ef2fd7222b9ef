"""Per-feature DTW distance matrices and their on-disk cache.

Distances use squared pointwise difference summed along the optimal warping
path, with no final square root. Matrices are cached one file per feature::

    magic     8 bytes   b"MSTSDM1\\0"
    feature   uint32 LE
    n         uint32 LE
    values    n*n float64 LE, row-major
    checksum  8 bytes   blake2b (digest_size=8) of feature|n|values

A ``manifest.json`` next to the files records the dataset fingerprint, the
shape, the cost tag and the band width; entries are only served when all of
them match the request.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .dataset import Dataset

COST_TAG = "squared"
MAGIC = b"MSTSDM1\0"
_HEADER = struct.Struct("<II")
_CHECKSUM_SIZE = 8
MANIFEST = "manifest.json"


@njit(cache=True, nogil=True)
def _dtw(a, b, window):
    n = a.shape[0]
    m = b.shape[0]
    if window < 0:
        w = max(n, m)
    else:
        w = max(window, abs(n - m))
    inf = np.inf
    prev = np.full(m + 1, inf)
    cur = np.full(m + 1, inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        lo = max(1, i - w)
        hi = min(m, i + w)
        cur[0] = inf
        for j in range(1, lo):
            cur[j] = inf
        ai = a[i - 1]
        for j in range(lo, hi + 1):
            d = ai - b[j - 1]
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = d * d + best
        for j in range(hi + 1, m + 1):
            cur[j] = inf
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True, nogil=True)
def _fill_rows(series, rows, window, out):
    n = series.shape[0]
    for r in range(rows.shape[0]):
        i = rows[r]
        for j in range(i + 1, n):
            out[i, j] = _dtw(series[i], series[j], window)


@njit(cache=True, nogil=True)
def _fill_cross(left, right, rows, window, out):
    for r in range(rows.shape[0]):
        i = rows[r]
        for j in range(right.shape[0]):
            out[i, j] = _dtw(left[i], right[j], window)


def _window(band):
    if band is None:
        return -1
    if band < 0:
        raise ValueError(f"band must be non-negative, got {band}")
    return int(band)


def dtw_distance(a, b, band: int | None = None) -> float:
    """DTW distance between two 1-d sequences.

    Parameters
    ----------
    a, b : array-like of float
        Non-empty sequences; lengths may differ.
    band : int, optional
        Sakoe-Chiba half-width ``|i - j| <= band``. Widened to the length
        difference when that is larger, so a path always exists. ``None``
        means unconstrained.

    Returns
    -------
    float
        Minimal sum of squared differences over monotone, contiguous warping
        paths from the first to the last pair of points.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("sequences must be 1-dimensional")
    if a.size == 0 or b.size == 0:
        raise ValueError("sequences must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("sequences must be finite")
    return float(_dtw(a, b, _window(band)))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    feature_index: int
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.feature_index == other.feature_index and np.array_equal(self.values, other.values)

    __hash__ = None


def pairwise_dtw(series: np.ndarray, band: int | None = None, n_jobs: int = 1) -> np.ndarray:
    """Symmetric matrix of DTW distances between the rows of ``series``.

    Only the upper triangle is computed; rows are dealt round-robin to
    ``n_jobs`` threads. Every entry is computed by the same kernel call
    whatever the thread count, so the output is bit-identical across
    ``n_jobs``.
    """
    series = np.ascontiguousarray(series, dtype=np.float64)
    n = series.shape[0]
    out = np.zeros((n, n))
    window = _window(band)
    n_jobs = max(1, min(int(n_jobs), n or 1))
    if n_jobs == 1:
        _fill_rows(series, np.arange(n, dtype=np.int64), window, out)
    else:
        # pair short and long rows so each worker gets a similar pair count
        order = np.empty(n, dtype=np.int64)
        order[0::2] = np.arange(0, (n + 1) // 2)
        order[1::2] = np.arange(n - 1, (n + 1) // 2 - 1, -1)
        chunks = [order[k::n_jobs] for k in range(n_jobs)]
        with ThreadPoolExecutor(n_jobs) as pool:
            list(pool.map(lambda rows: _fill_rows(series, rows, window, out), chunks))
    lower = np.tril_indices(n, -1)
    out[lower] = out.T[lower]
    return out


def cross_dtw(left: np.ndarray, right: np.ndarray, band: int | None = None, n_jobs: int = 1) -> np.ndarray:
    """``(len(left), len(right))`` matrix of DTW distances between two sets of series."""
    left = np.ascontiguousarray(left, dtype=np.float64)
    right = np.ascontiguousarray(right, dtype=np.float64)
    out = np.zeros((left.shape[0], right.shape[0]))
    window = _window(band)
    n_jobs = max(1, min(int(n_jobs), left.shape[0] or 1))
    rows = np.arange(left.shape[0], dtype=np.int64)
    if n_jobs == 1:
        _fill_cross(left, right, rows, window, out)
    else:
        with ThreadPoolExecutor(n_jobs) as pool:
            list(pool.map(lambda r: _fill_cross(left, right, r, window, out), [rows[k::n_jobs] for k in range(n_jobs)]))
    return out


def build_distance_matrix(dataset: Dataset, feature: int, band: int | None = None, n_jobs: int = 1) -> DistanceMatrix:
    if not 0 <= feature < dataset.n_features:
        raise IndexError(f"feature {feature} out of range for {dataset.n_features} features")
    return DistanceMatrix(feature, pairwise_dtw(dataset.X[:, feature, :], band=band, n_jobs=n_jobs))


# ---------------------------------------------------------------------------
# cache


class CacheError(Exception):
    pass


class CacheMissError(CacheError):
    pass


class StaleCacheError(CacheError):
    """Cached data belongs to another dataset or DTW configuration."""


class CorruptCacheError(CacheError):
    """Cache file truncated, malformed, or failing its checksum."""


def dataset_fingerprint(dataset: Dataset) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<QQQ", *dataset.X.shape))
    h.update(np.ascontiguousarray(dataset.X, dtype="<f8").tobytes())
    h.update("\x1f".join(dataset.y).encode())
    h.update(b"\x1e")
    h.update("\x1f".join(dataset.class_labels).encode())
    return h.hexdigest()


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=_CHECKSUM_SIZE).digest()


def encode_matrix(matrix: DistanceMatrix) -> bytes:
    values = np.ascontiguousarray(matrix.values, dtype="<f8")
    payload = _HEADER.pack(matrix.feature_index, values.shape[0]) + values.tobytes()
    return MAGIC + payload + _checksum(payload)


def decode_matrix(blob: bytes) -> DistanceMatrix:
    if len(blob) < len(MAGIC) + _HEADER.size + _CHECKSUM_SIZE:
        raise CorruptCacheError("file too short")
    if blob[: len(MAGIC)] != MAGIC:
        raise CorruptCacheError("bad magic bytes")
    payload = blob[len(MAGIC) : -_CHECKSUM_SIZE]
    if _checksum(payload) != blob[-_CHECKSUM_SIZE:]:
        raise CorruptCacheError("checksum mismatch")
    feature, n = _HEADER.unpack_from(payload)
    body = payload[_HEADER.size :]
    if len(body) != 8 * n * n:
        raise CorruptCacheError(f"expected {n}x{n} values, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, n)
    return DistanceMatrix(feature, values)


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DistanceCache:
    """Directory of per-feature distance matrices for one dataset + DTW setup."""

    def __init__(self, directory, fingerprint: str, n_features: int, n_samples: int, band: int | None = None):
        self.directory = Path(directory)
        self.fingerprint = fingerprint
        self.n_features = n_features
        self.n_samples = n_samples
        self.band = band

    @classmethod
    def for_dataset(cls, directory, dataset: Dataset, band: int | None = None) -> "DistanceCache":
        return cls(directory, dataset_fingerprint(dataset), dataset.n_features, dataset.n_samples, band)

    def expected_manifest(self) -> dict:
        return {
            "format": MAGIC.rstrip(b"\0").decode(),
            "fingerprint": self.fingerprint,
            "n_features": self.n_features,
            "n_samples": self.n_samples,
            "cost": COST_TAG,
            "band": self.band,
        }

    def feature_path(self, feature: int) -> Path:
        return self.directory / f"feature_{feature:04d}.msdm"

    def read_manifest(self) -> dict | None:
        try:
            with open(self.directory / MANIFEST, encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None
        except json.JSONDecodeError as exc:
            raise CorruptCacheError(f"unreadable manifest: {exc}") from exc

    def _check_manifest(self, manifest: dict | None) -> None:
        if manifest is None:
            raise CacheMissError(f"no manifest in {self.directory}")
        expected = self.expected_manifest()
        for key, value in expected.items():
            if manifest.get(key) != value:
                raise StaleCacheError(f"cache {key} is {manifest.get(key)!r}, expected {value!r}")

    def is_valid(self, feature: int) -> bool:
        try:
            self.load(feature)
        except CacheError:
            return False
        return True

    def load(self, feature: int) -> DistanceMatrix:
        self._check_manifest(self.read_manifest())
        path = self.feature_path(feature)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            raise CacheMissError(f"no cache entry for feature {feature}") from None
        matrix = decode_matrix(blob)
        if matrix.feature_index != feature or matrix.n != self.n_samples:
            raise CorruptCacheError(
                f"{path.name} holds feature {matrix.feature_index} with n={matrix.n}, "
                f"expected feature {feature} with n={self.n_samples}"
            )
        return matrix

    def store(self, matrix: DistanceMatrix) -> Path:
        if matrix.n != self.n_samples:
            raise ValueError(f"matrix has n={matrix.n}, cache expects {self.n_samples}")
        self.directory.mkdir(parents=True, exist_ok=True)
        manifest = self.read_manifest_quietly()
        expected = self.expected_manifest()
        if manifest is None or any(manifest.get(k) != v for k, v in expected.items()):
            for old in self.directory.glob("feature_*.msdm"):
                old.unlink()
            manifest = dict(expected, files={})
        path = self.feature_path(matrix.feature_index)
        _atomic_write(path, encode_matrix(matrix))
        manifest.setdefault("files", {})[str(matrix.feature_index)] = path.name
        _atomic_write(self.directory / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True).encode())
        return path

    def read_manifest_quietly(self) -> dict | None:
        try:
            return self.read_manifest()
        except CorruptCacheError:
            return None


def cache_store(matrix: DistanceMatrix, cache: DistanceCache) -> Path:
    return cache.store(matrix)


def cache_load(cache: DistanceCache, feature: int) -> DistanceMatrix:
    return cache.load(feature)


def build_distance_matrices(
    dataset: Dataset,
    band: int | None = None,
    n_jobs: int = 1,
    cache: DistanceCache | None = None,
    progress=None,
) -> tuple[list[DistanceMatrix], list[int]]:
    """All per-feature matrices, served from ``cache`` where valid.

    Returns the matrices in feature order and the list of features that had
    to be computed. ``progress``, if given, is called as
    ``progress(feature, status)`` with status ``"hit"`` or ``"computed"``.
    """
    if cache is not None and cache.band != band:
        raise ValueError("cache band differs from requested band")
    matrices = []
    computed = []
    for f in range(dataset.n_features):
        matrix = None
        if cache is not None:
            try:
                matrix = cache.load(f)
            except CacheError:
                matrix = None
        if matrix is None:
            matrix = build_distance_matrix(dataset, f, band=band, n_jobs=n_jobs)
            computed.append(f)
            if cache is not None:
                cache.store(matrix)
        if progress is not None:
            progress(f, "computed" if f in computed else "hit")
        matrices.append(matrix)
    return matrices, computed

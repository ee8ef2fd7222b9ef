"""Loading and validation of equal-length multivariate time-series datasets.

Two on-disk layouts are supported: the UEA/UCR ``.ts`` text format and CSV
(long or wide). Both produce an immutable :class:`Dataset` holding a
``(n_samples, n_features, series_length)`` float64 array and string labels.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import pandas as pd


class DatasetFormatError(ValueError):
    """Raised when a dataset file cannot be parsed or violates the format."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, lineno: int | None = None):
        self.path = None if path is None else str(path)
        self.lineno = lineno
        where = ""
        if self.path is not None:
            where = self.path if lineno is None else f"{self.path}:{lineno}"
        elif lineno is not None:
            where = f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Sample:
    series: np.ndarray  # (n_features, series_length)
    label: str
    index: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable labelled collection of equal-length multivariate series.

    Parameters
    ----------
    X : ndarray of shape (n_samples, n_features, series_length)
        Finite real values.
    y : sequence of str
        Class label of each sample.
    class_labels : sequence of str
        Ordered set of distinct labels; every entry of ``y`` must be in it.
    name : str
        Free-form name, used in reports only. Not part of equality.
    """

    X: np.ndarray
    y: np.ndarray
    class_labels: tuple[str, ...]
    name: str = field(default="dataset")

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.ndim != 3:
            raise ValueError(f"X must be 3-dimensional (samples, features, timesteps), got shape {X.shape}")
        if X.shape[0] and (X.shape[1] == 0 or X.shape[2] == 0):
            raise ValueError("samples must have at least one feature and one timestep")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains missing or non-finite values")
        y = np.array([str(v) for v in self.y], dtype=object)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y has {y.shape[0]} labels for {X.shape[0]} samples")
        class_labels = tuple(str(c) for c in self.class_labels)
        if not class_labels:
            raise ValueError("class_labels must be non-empty")
        if len(set(class_labels)) != len(class_labels):
            raise ValueError("class_labels contains duplicates")
        unknown = set(y) - set(class_labels)
        if unknown:
            raise ValueError(f"labels not in class_labels: {sorted(unknown)}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_labels", class_labels)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def series_length(self) -> int:
        return self.X.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def label_codes(self) -> np.ndarray:
        """Dense integer code of each sample's label (index into ``class_labels``)."""
        lookup = {c: i for i, c in enumerate(self.class_labels)}
        return np.array([lookup[v] for v in self.y], dtype=np.intp)

    @property
    def samples(self) -> list[Sample]:
        return list(self)

    def __len__(self) -> int:
        return self.n_samples

    def __iter__(self) -> Iterator[Sample]:
        for i in range(self.n_samples):
            yield Sample(self.X[i], self.y[i], i)

    def __getitem__(self, i: int) -> Sample:
        if i < 0:
            i += self.n_samples
        return Sample(self.X[i], self.y[i], i)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and self.class_labels == other.class_labels
            and np.array_equal(self.X, other.X)
            and list(self.y) == list(other.y)
        )

    __hash__ = None

    def summary(self) -> dict:
        return {
            "name": self.name,
            "n_samples": self.n_samples,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "series_length": self.series_length,
        }


def merge(a: Dataset, b: Dataset, name: str | None = None) -> Dataset:
    """Concatenate two datasets, ``a``'s samples first.

    Both must share feature count, series length and class label set. The
    class order of ``a`` is kept. An empty ``b`` returns data equal to ``a``.
    """
    if b.n_samples == 0:
        return Dataset(a.X, a.y, a.class_labels, name=name or a.name)
    if a.n_samples == 0:
        return Dataset(b.X, b.y, b.class_labels, name=name or b.name)
    if a.X.shape[1:] != b.X.shape[1:]:
        raise ValueError(
            f"cannot merge datasets of shape (*, {a.n_features}, {a.series_length}) "
            f"and (*, {b.n_features}, {b.series_length})"
        )
    if set(a.class_labels) != set(b.class_labels):
        raise ValueError(f"class label sets differ: {a.class_labels} vs {b.class_labels}")
    return Dataset(
        np.concatenate([a.X, b.X]),
        np.concatenate([a.y, b.y]),
        a.class_labels,
        name=name or a.name,
    )


# ---------------------------------------------------------------------------
# .ts format

_TRUE = {"true"}
_FALSE = {"false"}


def _parse_bool(token: str, path, lineno) -> bool:
    t = token.lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise DatasetFormatError(f"expected true/false, got {token!r}", path, lineno)


def load_ts(path: str | os.PathLike, name: str | None = None) -> Dataset:
    """Read an equal-length, labelled UEA ``.ts`` file.

    Records keep file order. Raises :class:`DatasetFormatError` (with the line
    number) on malformed headers or records, missing values, unequal lengths,
    non-numeric values or labels that the header does not declare.
    """
    path = Path(path)
    header: dict[str, object] = {}
    class_labels: tuple[str, ...] | None = None
    rows: list[np.ndarray] = []
    labels: list[str] = []
    in_data = False
    n_dims = None
    length = None

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not in_data:
                if not line.startswith("@"):
                    raise DatasetFormatError("record found before @data", path, lineno)
                key, _, rest = line.partition(" ")
                key = key.lower()
                rest = rest.strip()
                if key == "@data":
                    if class_labels is None:
                        raise DatasetFormatError("header does not declare class labels", path, lineno)
                    if header.get("equallength") is False:
                        raise DatasetFormatError("unequal-length datasets are not supported", path, lineno)
                    if header.get("timestamps"):
                        raise DatasetFormatError("timestamped series are not supported", path, lineno)
                    in_data = True
                    n_dims = header.get("dimensions")
                    if n_dims is None and header.get("univariate"):
                        n_dims = 1
                    length = header.get("serieslength")
                elif key == "@classlabel":
                    tokens = rest.split()
                    if not tokens or not _parse_bool(tokens[0], path, lineno):
                        raise DatasetFormatError("only labelled classification data is supported", path, lineno)
                    if len(tokens) < 2:
                        raise DatasetFormatError("@classLabel true declares no labels", path, lineno)
                    class_labels = tuple(tokens[1:])
                elif key in ("@dimensions", "@serieslength"):
                    try:
                        header[key[1:]] = int(rest)
                    except ValueError:
                        raise DatasetFormatError(f"{key} expects an integer, got {rest!r}", path, lineno) from None
                elif key in ("@univariate", "@equallength", "@timestamps", "@missing"):
                    header[key[1:]] = _parse_bool(rest, path, lineno)
                elif key in ("@problemname", "@targetlabel"):
                    header[key[1:]] = rest
                else:
                    raise DatasetFormatError(f"unknown header keyword {key}", path, lineno)
                continue

            fields = line.split(":")
            label = fields[-1].strip()
            dims = fields[:-1]
            if not dims:
                raise DatasetFormatError("record has no dimensions", path, lineno)
            if n_dims is None:
                n_dims = len(dims)
            if len(dims) != n_dims:
                raise DatasetFormatError(f"expected {n_dims} dimensions, found {len(dims)}", path, lineno)
            if label not in class_labels:
                raise DatasetFormatError(f"undeclared class label {label!r}", path, lineno)
            values = []
            for d in dims:
                series = []
                for tok in d.split(","):
                    tok = tok.strip()
                    if tok == "?" or tok.lower() == "nan":
                        raise DatasetFormatError("missing values are not supported", path, lineno)
                    try:
                        v = float(tok)
                    except ValueError:
                        raise DatasetFormatError(f"non-numeric value {tok!r}", path, lineno) from None
                    if not math.isfinite(v):
                        raise DatasetFormatError(f"non-finite value {tok!r}", path, lineno)
                    series.append(v)
                values.append(series)
            lengths = {len(s) for s in values}
            if len(lengths) != 1:
                raise DatasetFormatError("dimensions of unequal length within a record", path, lineno)
            (m,) = lengths
            if length is None:
                length = m
            if m != length:
                raise DatasetFormatError(f"series length {m} differs from expected {length}", path, lineno)
            rows.append(np.asarray(values, dtype=np.float64))
            labels.append(label)

    if not in_data:
        raise DatasetFormatError("no @data section", path)
    if rows:
        X = np.stack(rows)
    else:
        X = np.empty((0, n_dims or 0, length or 0))
    if name is None:
        name = str(header.get("problemname") or path.stem)
    return Dataset(X, labels, class_labels, name=name)


def write_ts(dataset: Dataset, path: str | os.PathLike, problem_name: str | None = None) -> None:
    """Write ``dataset`` as a ``.ts`` file that :func:`load_ts` reads back identically."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"@problemName {problem_name or dataset.name}\n")
        fh.write("@timeStamps false\n@missing false\n")
        fh.write(f"@univariate {'true' if dataset.n_features == 1 else 'false'}\n")
        fh.write(f"@dimensions {dataset.n_features}\n")
        fh.write(f"@equalLength true\n@seriesLength {dataset.series_length}\n")
        fh.write(f"@classLabel true {' '.join(dataset.class_labels)}\n@data\n")
        for x, label in zip(dataset.X, dataset.y):
            dims = [",".join(repr(float(v)) for v in series) for series in x]
            fh.write(":".join(dims) + f":{label}\n")


def load_uea(spec: str | os.PathLike) -> Dataset:
    """Resolve a dataset spec and load it, merging train and test parts.

    ``spec`` may be a ``.ts`` file, a comma-separated list of files (merged
    in order), or an archive directory ``<dir>/<Name>_TRAIN.ts`` +
    ``<dir>/<Name>_TEST.ts``.
    """
    spec = str(spec)
    if os.path.isdir(spec):
        d = Path(spec)
        train = sorted(d.glob("*_TRAIN.ts"))
        test = sorted(d.glob("*_TEST.ts"))
        if len(train) != 1 or len(test) != 1:
            raise DatasetFormatError("directory must contain exactly one *_TRAIN.ts and one *_TEST.ts", d)
        name = train[0].name[: -len("_TRAIN.ts")]
        return merge(load_ts(train[0], name=name), load_ts(test[0], name=name), name=name)
    parts = [p for p in spec.split(",") if p]
    if not parts:
        raise DatasetFormatError("empty dataset spec")
    if not parts[0].lower().endswith(".ts"):
        return load_csv(parts[0], CsvSchema(labels_path=parts[1] if len(parts) > 1 else None))
    datasets = [load_ts(p) for p in parts]
    name = Path(parts[0]).stem
    for suffix in ("_TRAIN", "_TEST"):
        if name.upper().endswith(suffix):
            name = name[: -len(suffix)]
    out = datasets[0]
    for other in datasets[1:]:
        out = merge(out, other)
    return Dataset(out.X, out.y, out.class_labels, name=name)


# ---------------------------------------------------------------------------
# CSV format


@dataclass
class CsvSchema:
    """Column mapping for :func:`load_csv`.

    ``layout="long"``: one row per cell with ``sample``, ``feature``,
    ``timestep`` and ``value`` columns.
    ``layout="wide"``: one row per (sample, feature) with ``sample`` and
    ``feature`` columns followed by one column per timestep, in order.

    Labels come from ``labels_path`` (columns ``sample`` and ``label``) or,
    if that is ``None``, from a ``label`` column in the data file itself.
    Samples are ordered by first appearance in the label source; features by
    sorted id. ``class_labels`` fixes the class order, otherwise labels are
    sorted (numerically when all labels are numbers).
    """

    layout: str = "long"
    labels_path: str | os.PathLike | None = None
    sample: str = "sample_id"
    feature: str = "feature_id"
    timestep: str = "timestep"
    value: str = "value"
    label: str = "label"
    class_labels: Sequence[str] | None = None


def _natural_sorted(labels) -> list[str]:
    labels = [str(v) for v in labels]
    try:
        return sorted(labels, key=float)
    except ValueError:
        return sorted(labels)


def load_csv(path: str | os.PathLike, schema: CsvSchema | None = None, name: str | None = None) -> Dataset:
    """Read a dataset from CSV; see :class:`CsvSchema` for the layouts."""
    schema = schema or CsvSchema()
    path = Path(path)
    df = pd.read_csv(path, dtype={schema.sample: str, schema.feature: str}, float_precision="round_trip")
    if schema.labels_path is not None:
        lab = pd.read_csv(schema.labels_path, dtype=str)
    else:
        if schema.label not in df.columns:
            raise DatasetFormatError(f"no label table and no {schema.label!r} column", path)
        lab = df[[schema.sample, schema.label]].drop_duplicates()
    for col in (schema.sample, schema.label):
        if col not in lab.columns:
            raise DatasetFormatError(f"label table lacks column {col!r}", path)
    lab = lab.astype({schema.sample: str, schema.label: str})
    if lab[schema.sample].duplicated().any():
        dup = lab.loc[lab[schema.sample].duplicated(), schema.sample].iloc[0]
        raise DatasetFormatError(f"sample {dup!r} has more than one label", path)
    sample_ids = list(lab[schema.sample])
    label_of = dict(zip(lab[schema.sample], lab[schema.label]))

    for col in (schema.sample, schema.feature):
        if col not in df.columns:
            raise DatasetFormatError(f"missing column {col!r}", path)
    missing = set(df[schema.sample]) - set(label_of)
    if missing:
        raise DatasetFormatError(f"samples without a label: {sorted(missing)[:5]}", path)
    feature_ids = _natural_sorted(df[schema.feature].unique())

    if schema.layout == "long":
        for col in (schema.timestep, schema.value):
            if col not in df.columns:
                raise DatasetFormatError(f"missing column {col!r}", path)
        keys = [schema.sample, schema.feature, schema.timestep]
        if df.duplicated(keys).any():
            row = df.loc[df.duplicated(keys)].iloc[0]
            raise DatasetFormatError(
                f"duplicate cell (sample={row[schema.sample]}, feature={row[schema.feature]}, "
                f"timestep={row[schema.timestep]})",
                path,
            )
        wide = df.pivot(index=[schema.sample, schema.feature], columns=schema.timestep, values=schema.value)
        wide = wide.reindex(columns=sorted(wide.columns))
    elif schema.layout == "wide":
        skip = {schema.sample, schema.feature, schema.label}
        value_cols = [c for c in df.columns if c not in skip]
        if df.duplicated([schema.sample, schema.feature]).any():
            raise DatasetFormatError("duplicate (sample, feature) row", path)
        wide = df.set_index([schema.sample, schema.feature])[value_cols]
    else:
        raise ValueError(f"unknown CSV layout {schema.layout!r}")

    index = pd.MultiIndex.from_product([sample_ids, feature_ids])
    present = set(wide.index)
    absent = [k for k in index if k not in present]
    if absent:
        raise DatasetFormatError(f"ragged data: no series for (sample, feature) {absent[0]}", path)
    values = wide.reindex(index).to_numpy(dtype=np.float64)
    if np.isnan(values).any():
        raise DatasetFormatError("ragged data: series of unequal length or missing values", path)
    X = values.reshape(len(sample_ids), len(feature_ids), values.shape[1])
    y = [label_of[s] for s in sample_ids]
    class_labels = tuple(schema.class_labels) if schema.class_labels is not None else tuple(_natural_sorted(set(y)))
    return Dataset(X, y, class_labels, name=name or path.stem)


def write_csv(dataset: Dataset, path: str | os.PathLike, labels_path: str | os.PathLike) -> None:
    """Write ``dataset`` in long CSV layout plus a separate label table."""
    n, f, m = dataset.X.shape
    s_idx, f_idx, t_idx = np.meshgrid(np.arange(n), np.arange(f), np.arange(m), indexing="ij")
    pd.DataFrame(
        {
            "sample_id": s_idx.ravel(),
            "feature_id": f_idx.ravel(),
            "timestep": t_idx.ravel(),
            "value": dataset.X.ravel(),
        }
    ).to_csv(path, index=False, float_format="%.17g")
    pd.DataFrame({"sample_id": np.arange(n), "label": list(dataset.y)}).to_csv(labels_path, index=False)

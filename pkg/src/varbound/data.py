"""Dataset ingestion: dense CSV and libsvm sparse text."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .targets import Dataset

FORMATS = ("csv", "libsvm")
_CLASS_LABELS = {-1.0: -1.0, 0.0: -1.0, 1.0: 1.0}


class DatasetError(ValueError):
    pass


def _parse_float(text, lineno, what):
    try:
        return float(text)
    except ValueError:
        raise DatasetError(f"line {lineno}: cannot parse {what} {text!r}") from None


def _read_csv(path):
    rows, labels, width = [], [], None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise DatasetError(f"line {lineno}: need at least one feature and a label")
            elif len(row) != width:
                raise DatasetError(f"line {lineno}: expected {width} fields, found {len(row)}")
            values = [_parse_float(cell.strip(), lineno, "value") for cell in row]
            rows.append(values[:-1])
            labels.append(values[-1])
    return rows, labels


def _read_libsvm(path, n_features):
    entries, labels, max_index = [], [], 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, *tokens = line.split()
            labels.append(_parse_float(head, lineno, "label"))
            row = {}
            for tok in tokens:
                idx, sep, val = tok.partition(":")
                if not sep or not idx.isdigit() or int(idx) < 1:
                    raise DatasetError(f"line {lineno}: malformed feature {tok!r}")
                row[int(idx)] = _parse_float(val, lineno, "feature value")
                max_index = max(max_index, int(idx))
            entries.append((lineno, row))
    d = n_features if n_features is not None else max_index
    if d < 1:
        raise DatasetError(f"{path}: no features found")
    X = np.zeros((len(entries), d))
    for i, (lineno, row) in enumerate(entries):
        for idx, val in row.items():
            if idx > d:
                raise DatasetError(f"line {lineno}: feature index {idx} exceeds {d} features")
            X[i, idx - 1] = val
    return X, labels


def load_dataset(
    path,
    fmt: str = "csv",
    *,
    classification: bool = False,
    add_intercept: bool = False,
    standardize: bool = False,
    n_features: int | None = None,
) -> Dataset:
    """Read a dataset; classification labels {0, -1} map to -1 and {1, +1} to +1.

    ``standardize`` rescales each feature column to zero mean and unit
    variance (constant columns are only centered). ``add_intercept`` then
    appends a column of ones.
    """
    path = Path(path)
    if fmt == "csv":
        rows, labels = _read_csv(path)
        X = np.array(rows, dtype=float) if rows else np.zeros((0, 0))
    elif fmt == "libsvm":
        X, labels = _read_libsvm(path, n_features)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}; expected one of {FORMATS}")
    if not labels:
        raise DatasetError(f"{path}: no data rows")
    y = np.array(labels, dtype=float)
    if classification:
        bad = [v for v in y if v not in _CLASS_LABELS]
        if bad:
            raise DatasetError(f"{path}: label {bad[0]!r} is not a valid class label")
        y = np.array([_CLASS_LABELS[v] for v in y])
    if standardize:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        X = (X - mean) / np.where(std > 0, std, 1.0)
    if add_intercept:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return Dataset(X, y)


def write_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])

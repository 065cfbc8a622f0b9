from __future__ import annotations

import csv
import dataclasses
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from localmax.utils.classes import FloatArray, IntArray
from localmax.utils.constants import CSV_ENCODING, ZERO_VARIANCE_THRESHOLD
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxCsvParseException,
    LocalMaxDatasetException,
    LocalMaxNumericInputException,
)
from localmax.utils.functions import write_csv


@dataclasses.dataclass
class Standardization:
    """
    Per-feature mean/std fit on a training split.
    """

    mean: FloatArray
    std: FloatArray

    def apply(self, points: FloatArray) -> FloatArray:
        if points.ndim != 2 or points.shape[1] != self.mean.shape[0]:
            raise LocalMaxConfigurationException(
                f'Standardization of {self.mean.shape[0]} features applied to points of shape {points.shape}.'
            )
        return (points - self.mean) / self.std

    def invert(self, points: FloatArray) -> FloatArray:
        return points * self.std + self.mean

    def matches(self, other: Optional[Standardization]) -> bool:
        return (
            other is not None
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
        )

    def to_json(self) -> Dict[str, Any]:
        return {'mean': [float(v) for v in self.mean], 'std': [float(v) for v in self.std]}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> Standardization:
        return Standardization(np.asarray(obj['mean'], dtype=np.float64), np.asarray(obj['std'], dtype=np.float64))


@dataclasses.dataclass
class Dataset:
    """
    n x d samples (rows), optional per-row targets and integer labels.
    @note when standardization is set, X is already standardized by it.
    """

    X: FloatArray
    targets: Optional[FloatArray] = None
    labels: Optional[IntArray] = None
    feature_names: Optional[List[str]] = None
    standardization: Optional[Standardization] = None

    def __post_init__(self) -> None:
        if self.X.ndim != 2:
            raise LocalMaxDatasetException(f'Dataset samples must be a matrix, got shape {self.X.shape}.')
        if not np.all(np.isfinite(self.X)):
            raise LocalMaxNumericInputException('Dataset samples contain non-finite values.')
        for name, column in (('targets', self.targets), ('labels', self.labels)):
            if column is not None and column.shape != (self.X.shape[0],):
                raise LocalMaxDatasetException(
                    f'Dataset {name} have shape {column.shape}, expected ({self.X.shape[0]},).'
                )
        if self.targets is not None and not np.all(np.isfinite(self.targets)):
            raise LocalMaxNumericInputException('Dataset targets contain non-finite values.')

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    def subset(self, indices: IntArray) -> Dataset:
        return Dataset(
            self.X[indices],
            None if self.targets is None else self.targets[indices],
            None if self.labels is None else self.labels[indices],
            self.feature_names,
            self.standardization,
        )

    def standardized_with(self, standardization: Standardization) -> Dataset:
        if self.standardization is not None:
            raise LocalMaxDatasetException('The dataset is already standardized.')
        return Dataset(
            standardization.apply(self.X), self.targets, self.labels, self.feature_names, standardization
        )


def _parse_cell(cell: str, row: int, column: str, path: Path) -> float:
    try:
        value = float(cell)
    except ValueError as ve:
        raise LocalMaxCsvParseException(
            f'{path}: row {row}, column "{column}": "{cell}" is not a number.', row, column
        ) from ve
    if not np.isfinite(value):
        raise LocalMaxCsvParseException(f'{path}: row {row}, column "{column}": non-finite value.', row, column)
    return value


def load_csv(path: Path, target_column: Optional[str] = None, *, label_column: Optional[str] = None) -> Dataset:
    """
    read a rectangular numeric csv with a header row (comma separated, LF or CRLF).
    @param path: the csv file
    @param target_column: if given, this column becomes the targets vector and is excluded from the features
    @param label_column: if given, this integer column becomes the labels vector and is excluded from the features
    @return: the (unstandardized) dataset. rows are numbered from 1 (the header), like a spreadsheet
    """
    try:
        with open(path, 'r', encoding=CSV_ENCODING, newline='') as csv_file:
            lines = [line for line in csv.reader(csv_file)]
    except OSError as e:
        raise LocalMaxDatasetException(f"Can't read the csv file {path}.") from e

    if not lines or not lines[0]:
        raise LocalMaxCsvParseException(f'{path}: missing header row.', 1, None)
    header = [name.strip() for name in lines[0]]

    special_columns: Dict[str, Optional[str]] = {'target': target_column, 'label': label_column}
    for kind, column in special_columns.items():
        if column is not None and column not in header:
            raise LocalMaxCsvParseException(f'{path}: missing {kind} column "{column}".', 1, column)
    feature_indices = [i for i, name in enumerate(header) if name not in (target_column, label_column)]
    if not feature_indices:
        raise LocalMaxDatasetException(f'{path}: no feature columns.')

    rows: List[List[float]] = []
    for row_number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if len(line) != len(header):
            raise LocalMaxCsvParseException(
                f'{path}: row {row_number} has {len(line)} cells, the header has {len(header)}.', row_number, None
            )
        rows.append([_parse_cell(cell.strip(), row_number, header[i], path) for i, cell in enumerate(line)])
    if not rows:
        raise LocalMaxDatasetException(f'{path}: no data rows.')

    table = np.asarray(rows, dtype=np.float64)
    targets = table[:, header.index(target_column)] if target_column is not None else None
    labels = None
    if label_column is not None:
        label_values = table[:, header.index(label_column)]
        if not np.array_equal(label_values, np.round(label_values)):
            raise LocalMaxDatasetException(f'{path}: label column "{label_column}" must hold integers.')
        labels = label_values.astype(np.int64)

    return Dataset(table[:, feature_indices], targets, labels, [header[i] for i in feature_indices])


def save_csv(path: Path, dataset: Dataset, *, target_column: str = 'target', label_column: str = 'label') -> None:
    """
    write the dataset's rows (features, then the target and label columns if present).
    """
    names = dataset.feature_names or [f'x{i + 1}' for i in range(dataset.d)]
    header = list(names)
    columns: List[Sequence[Any]] = [dataset.X[:, i] for i in range(dataset.d)]
    if dataset.targets is not None:
        header.append(target_column)
        columns.append(dataset.targets)
    if dataset.labels is not None:
        header.append(label_column)
        columns.append([int(label) for label in dataset.labels])
    write_csv(path, header, zip(*columns))


def fit_standardization(points: FloatArray, *, feature_names: Optional[List[str]] = None) -> Standardization:
    """
    per-feature mean and (population) std. zero-variance features get std 1, so they map to 0.
    """
    mean = points.mean(axis=0)
    std = points.std(axis=0)
    constant = std < ZERO_VARIANCE_THRESHOLD
    for index in np.flatnonzero(constant):
        name = feature_names[index] if feature_names else f'#{index}'
        print(f'Warning:  feature {name} has zero variance on the training split; it is standardized to 0.')
    std = np.where(constant, 1.0, std)
    return Standardization(mean, std)


def split_standardize(ds: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    seeded shuffle split, then standardization fit on the train split only and applied to both.
    @param ds: the unstandardized dataset
    @param train_fraction: in (0,1)
    @param seed: the shuffle seed
    @return: (train, test)
    """
    if not 0 < train_fraction < 1:
        raise LocalMaxConfigurationException(f'The train fraction must be in (0,1), not {train_fraction}.')
    n_train = int(round(ds.n * train_fraction))
    if n_train == 0 or n_train == ds.n:
        raise LocalMaxDatasetException(
            f'Splitting {ds.n} rows with train fraction {train_fraction} leaves an empty train or test split.'
        )

    order = np.random.default_rng(seed).permutation(ds.n)
    train, test = ds.subset(order[:n_train]), ds.subset(order[n_train:])
    standardization = fit_standardization(train.X, feature_names=ds.feature_names)
    return train.standardized_with(standardization), test.standardized_with(standardization)

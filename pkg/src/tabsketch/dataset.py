"""CSV ingestion into dense numeric datasets, plus deterministic stratified folds.

Ingestion rules:
    * header row required, UTF-8, decimal-point reals, blank cell = missing
    * a feature column is numeric iff every non-missing cell parses as a real;
      otherwise it is ordinal-encoded by first appearance of the raw string
    * labels are dictionary-encoded to 0..m-1 by first appearance; rows with a
      blank label cell are always dropped
    * missing feature values are handled per policy: ``reject`` drops the row,
      ``impute_mean`` substitutes the column mean over the kept rows
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .seeding import derived_rng

MISSING_POLICIES = ("reject", "impute_mean")


@dataclass(frozen=True)
class Dataset:
    """A labelled numeric table: ``features`` is n x d, labels in {0..m-1}."""

    id: str
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: tuple[str, ...]
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=int)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError("features must be a non-empty 2-D matrix")
        if y.shape != (x.shape[0],):
            raise DataError("labels must be a vector with one entry per row")
        if not np.isfinite(x).all():
            raise DataError("features contain non-finite values")
        if self.num_classes < 2:
            raise DataError("need at least two classes")
        if y.min() < 0 or y.max() >= self.num_classes:
            raise DataError("labels out of range for num_classes")
        counts = np.bincount(y, minlength=self.num_classes)
        if (counts == 0).any():
            absent = int(np.flatnonzero(counts == 0)[0])
            raise DataError(f"class {absent} has no rows")
        if len(self.feature_names) != x.shape[1]:
            raise DataError("feature_names must have one entry per column")
        if self.label_names is not None and len(self.label_names) != self.num_classes:
            raise DataError("label_names must have one entry per class")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass(frozen=True)
class FoldSplit:
    """One train/test split; ``test_rows`` across folds partition all rows."""

    fold_index: int
    train_rows: np.ndarray
    test_rows: np.ndarray


def _parse_real(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, label_column: str, missing_policy: str = "reject",
             dataset_id: str | None = None) -> Dataset:
    """Read a headered CSV into a :class:`Dataset`.

    Raises :class:`DataError` for a missing label column, zero usable rows, a
    class that loses all rows to filtering, or an unparsable file.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: file is empty") from None
            raw_rows = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: unparsable CSV: {exc}") from exc

    header = [name.strip() for name in header]
    if label_column not in header:
        raise DataError(f"{path}: label column {label_column!r} not in header")
    label_pos = header.index(label_column)
    feature_pos = [j for j in range(len(header)) if j != label_pos]
    if not feature_pos:
        raise DataError(f"{path}: no feature columns besides the label")
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")

    # Rows without a label cannot be used under either policy.
    rows = []
    raw_labels = []
    for row in raw_rows:
        label_cell = row[label_pos].strip()
        if label_cell == "":
            continue
        rows.append(row)
        raw_labels.append(label_cell)
    if not rows:
        raise DataError(f"{path}: zero usable rows")

    label_names: list[str] = []
    label_code: dict[str, int] = {}
    for cell in raw_labels:
        if cell not in label_code:
            label_code[cell] = len(label_names)
            label_names.append(cell)
    y = np.array([label_code[cell] for cell in raw_labels], dtype=int)
    if len(label_names) < 2:
        raise DataError(f"{path}: need at least two classes, found {len(label_names)}")

    n, d = len(rows), len(feature_pos)
    x = np.empty((n, d))
    missing = np.zeros((n, d), dtype=bool)
    for jj, j in enumerate(feature_pos):
        cells = [row[j].strip() for row in rows]
        numeric = all(_parse_real(c) is not None for c in cells if c != "")
        if numeric:
            for i, cell in enumerate(cells):
                if cell == "":
                    missing[i, jj] = True
                    continue
                value = float(cell)
                if math.isnan(value):
                    missing[i, jj] = True
                elif math.isinf(value):
                    raise DataError(f"{path}: column {header[j]!r} has a non-finite value")
                else:
                    x[i, jj] = value
        else:
            codes: dict[str, int] = {}
            for i, cell in enumerate(cells):
                if cell == "":
                    missing[i, jj] = True
                    continue
                if cell not in codes:
                    codes[cell] = len(codes)
                x[i, jj] = codes[cell]

    if missing_policy == "reject":
        keep = ~missing.any(axis=1)
        x = x[keep]
        y = y[keep]
    else:
        for jj in range(d):
            gap = missing[:, jj]
            if not gap.any():
                continue
            if gap.all():
                raise DataError(f"{path}: column {header[feature_pos[jj]]!r} is entirely missing")
            x[gap, jj] = x[~gap, jj].mean()

    if x.shape[0] == 0:
        raise DataError(f"{path}: zero usable rows after filtering")
    counts = np.bincount(y, minlength=len(label_names))
    if (counts == 0).any():
        absent = label_names[int(np.flatnonzero(counts == 0)[0])]
        raise DataError(f"{path}: class {absent!r} has no rows after filtering")

    return Dataset(
        id=dataset_id if dataset_id is not None else path.stem,
        features=x,
        labels=y,
        num_classes=len(label_names),
        feature_names=tuple(header[j] for j in feature_pos),
        label_names=tuple(label_names),
    )


def write_csv(path, features: np.ndarray, labels: np.ndarray,
              feature_names, label_column: str = "label",
              label_names=None) -> None:
    """Write rows in the ingestion schema (features plus a trailing label column)."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*feature_names, label_column])
        for row, lab in zip(features, labels):
            name = label_names[lab] if label_names is not None else str(int(lab))
            writer.writerow([repr(float(v)) for v in row] + [name])


def stratified_folds(ds: Dataset, k: int, seed: int) -> list[FoldSplit]:
    """Split rows into ``k`` folds, stratified by class.

    Within each class the rows are shuffled by the seeded generator and dealt
    round-robin to the k test partitions, so per-class test counts differ by
    at most one across folds and the same seed always yields the same splits.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > ds.n:
        raise ValueError(f"k={k} exceeds the number of rows ({ds.n})")
    rng = derived_rng(seed, "folds")
    test_parts: list[list[int]] = [[] for _ in range(k)]
    for c in range(ds.num_classes):
        class_rows = np.flatnonzero(ds.labels == c)
        dealt = rng.permutation(class_rows)
        for j, row in enumerate(dealt):
            test_parts[j % k].append(int(row))
    folds = []
    for f in range(k):
        test = np.array(sorted(test_parts[f]), dtype=int)
        mask = np.ones(ds.n, dtype=bool)
        mask[test] = False
        folds.append(FoldSplit(fold_index=f, train_rows=np.flatnonzero(mask), test_rows=test))
    return folds


def pct_seen(ds: Dataset, n_max: int) -> float:
    """Percentage of rows a context capped at ``n_max`` can see, one decimal."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    return round(min(100.0, 100.0 * n_max / ds.n), 1)

"""Synthetic dataset generation, CSV ingestion, and stratified splitting.

Label noise is the difficulty mechanism for the synthetic task: flipped
labels produce systematically higher per-sample losses under a partially
trained model, which is what the pace maps act on. Clean labels are kept
alongside for diagnostics and clean-label evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class Dataset:
    features: np.ndarray  # (n, dim) float64
    labels: np.ndarray  # (n,) int64
    class_count: int
    clean_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels are misaligned")
        if self.labels.size == 0:
            raise ValueError("dataset must contain at least one sample")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        if self.clean_labels is not None:
            self.clean_labels = np.asarray(self.clean_labels, dtype=np.int64)
            if self.clean_labels.shape != self.labels.shape:
                raise ValueError("clean_labels must align with labels")

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float
    val_frac: float
    test_frac: float
    seed: int

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ValueError(f"all split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


def take(dataset: Dataset, indices) -> Dataset:
    """Subset a dataset by row indices, keeping the clean-label sidecar."""
    idx = np.asarray(indices, dtype=np.int64)
    return Dataset(
        dataset.features[idx],
        dataset.labels[idx],
        dataset.class_count,
        None if dataset.clean_labels is None else dataset.clean_labels[idx],
    )


def generate_synthetic(
    n: int,
    d: int,
    class_count: int,
    class_separation: float,
    noise_rate: float,
    seed: int,
) -> Dataset:
    """Gaussian class clusters with a deterministic fraction of flipped labels.

    Class means sit on the first feature axis with spacing class_separation;
    each cluster has unit isotropic variance. Exactly floor(noise_rate * n)
    labels are flipped uniformly to another class. Pure function of its
    arguments.
    """
    if class_count < 2:
        raise ValueError(f"need at least 2 classes, got {class_count}")
    if n < class_count:
        raise ValueError(f"need n >= class_count, got n={n}, class_count={class_count}")
    if d < 1:
        raise ValueError(f"need at least one feature, got d={d}")
    if not class_separation > 0:
        raise ValueError(f"class_separation must be positive, got {class_separation}")
    if not 0.0 <= noise_rate < 1.0:
        raise ValueError(f"noise_rate must lie in [0, 1), got {noise_rate}")

    rng = np.random.default_rng(seed)
    base, extra = divmod(n, class_count)
    counts = [base + (1 if c < extra else 0) for c in range(class_count)]
    clean = np.repeat(np.arange(class_count, dtype=np.int64), counts)
    clean = clean[rng.permutation(n)]

    offsets = class_separation * (np.arange(class_count) - (class_count - 1) / 2.0)
    features = rng.standard_normal((n, d))
    features[:, 0] += offsets[clean]

    labels = clean.copy()
    n_flip = int(np.floor(noise_rate * n))
    if n_flip:
        flip_idx = rng.choice(n, size=n_flip, replace=False)
        shift = rng.integers(1, class_count, size=n_flip)
        labels[flip_idx] = (clean[flip_idx] + shift) % class_count
    return Dataset(features, labels, class_count, clean_labels=clean)


def _parse_float(cell, row_num, col_name, path):
    try:
        value = float(cell)
    except ValueError:
        raise ValueError(
            f"{path}: non-numeric value {cell!r} at row {row_num}, column {col_name!r}"
        ) from None
    if not np.isfinite(value):
        raise ValueError(
            f"{path}: non-finite value {cell!r} at row {row_num}, column {col_name!r}"
        )
    return value


def load_csv(path, label_column, class_count=None, drop_columns=()) -> Dataset:
    """Load a comma-separated, header-first dataset.

    label_column is a header name or 0-based column index. All remaining
    columns except drop_columns become features. Integer labels are used
    as-is; otherwise distinct label strings are mapped to classes in
    lexicographic order. Features are NOT standardized here; use
    `standardize` after splitting.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        rows = [(i + 2, row) for i, row in enumerate(reader)]

    if isinstance(label_column, int):
        if not 0 <= label_column < len(header):
            raise ValueError(f"{path}: label column index {label_column} out of range")
        label_idx = label_column
    else:
        if label_column not in header:
            raise ValueError(f"{path}: no column named {label_column!r} in header {header}")
        label_idx = header.index(label_column)

    dropped = set(drop_columns)
    unknown = dropped - set(header)
    if unknown:
        raise ValueError(f"{path}: drop_columns {sorted(unknown)} not in header")
    feature_idx = [
        i for i, name in enumerate(header) if i != label_idx and name not in dropped
    ]
    if not feature_idx:
        raise ValueError(f"{path}: no feature columns left")
    if not rows:
        raise ValueError(f"{path}: no data rows")

    features = np.empty((len(rows), len(feature_idx)), dtype=np.float64)
    raw_labels = []
    for r, (row_num, row) in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(
                f"{path}: row {row_num} has {len(row)} cells, expected {len(header)}"
            )
        for c, i in enumerate(feature_idx):
            features[r, c] = _parse_float(row[i], row_num, header[i], path)
        raw_labels.append(row[label_idx])

    try:
        labels = np.array([int(cell) for cell in raw_labels], dtype=np.int64)
    except ValueError:
        mapping = {name: i for i, name in enumerate(sorted(set(raw_labels)))}
        labels = np.array([mapping[cell] for cell in raw_labels], dtype=np.int64)
        if class_count is not None and len(mapping) > class_count:
            raise ValueError(
                f"{path}: found {len(mapping)} distinct labels, more than "
                f"class_count={class_count}"
            ) from None

    if labels.min() < 0:
        raise ValueError(f"{path}: negative integer labels are not class indices")
    inferred = int(labels.max()) + 1
    if class_count is None:
        class_count = inferred
    elif inferred > class_count:
        bad = int(np.argmax(labels >= class_count))
        raise ValueError(
            f"{path}: unseen label {raw_labels[bad]!r} at row {rows[bad][0]} "
            f"(class_count={class_count})"
        )
    return Dataset(features, labels, class_count)


def save_csv(path, dataset: Dataset):
    """Write a dataset as f0..f{d-1},label[,clean_label] with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        header = [f"f{i}" for i in range(dataset.dim)] + ["label"]
        if dataset.clean_labels is not None:
            header.append("clean_label")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]] + [int(dataset.labels[i])]
            if dataset.clean_labels is not None:
                row.append(int(dataset.clean_labels[i]))
            writer.writerow(row)


def split(dataset: Dataset, spec: SplitSpec):
    """Deterministic stratified split into (train, val, test).

    Per class the three shares are rounded by largest remainder, with ties
    broken toward the globally most under-allocated split, so each class is
    off by at most one sample per split and overall sizes stay exact for
    even class counts.
    """
    rng = np.random.default_rng(spec.seed)
    fracs = np.array([spec.train_frac, spec.val_frac, spec.test_frac])
    parts = [[], [], []]
    deficit = np.zeros(3)
    for c in range(dataset.class_count):
        idx = np.flatnonzero(dataset.labels == c)
        if idx.size < 3:
            raise ValueError(
                f"class {c} has {idx.size} samples; need at least 3 to stratify"
            )
        idx = rng.permutation(idx)
        quotas = fracs * idx.size
        counts = np.floor(quotas).astype(int)
        remainders = quotas - counts
        for _ in range(idx.size - counts.sum()):
            order = sorted(range(3), key=lambda s: (-remainders[s], -deficit[s], s))
            counts[order[0]] += 1
            remainders[order[0]] = -1.0  # each split gains at most one extra
        deficit += quotas - counts
        bounds = np.cumsum(counts)
        parts[0].append(idx[: bounds[0]])
        parts[1].append(idx[bounds[0] : bounds[1]])
        parts[2].append(idx[bounds[1] : bounds[2]])
    picked = [np.sort(np.concatenate(p)) for p in parts]
    return tuple(take(dataset, idx) for idx in picked)


def standardize(train: Dataset, *others: Dataset):
    """Zero-mean/unit-variance features using training-split statistics only.

    The per-column variance is clamped at 1e-12, so constant columns map to
    all zeros. Returns the transformed (train, *others).
    """
    mean = train.features.mean(axis=0)
    std = np.sqrt(np.maximum(train.features.var(axis=0), 1e-12))

    def apply(ds: Dataset) -> Dataset:
        return Dataset((ds.features - mean) / std, ds.labels, ds.class_count, ds.clean_labels)

    return tuple(apply(ds) for ds in (train, *others))

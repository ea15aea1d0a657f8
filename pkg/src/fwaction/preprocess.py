"""Standardization, label encoding and seeded train/test splitting.

All randomness flows from an explicit 64-bit seed through numpy's PCG64
generator; nothing reads global or time-based state. Derived streams are
seeded with ``[seed, stream_tag]`` so concurrent use cannot perturb
results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ACTION_INDEX, ACTION_NAMES, N_CLASSES, Dataset
from .errors import DataError, ModelError

# Stream tags for generators derived from a split seed. Classes use their
# own index 0..3; the re-shuffle streams must not collide with those.
_TRAIN_RESHUFFLE_TAG = 101
_TEST_RESHUFFLE_TAG = 102


def encode_label(name: str) -> int:
    """Class index for an action name. Exact, case-sensitive match."""
    try:
        return ACTION_INDEX[name]
    except KeyError:
        raise DataError(f"unknown action {name!r}; expected one of {ACTION_NAMES}") from None


def decode_label(index: int) -> str:
    if not 0 <= index < N_CLASSES:
        raise DataError(f"class index {index} outside 0..{N_CLASSES - 1}")
    return ACTION_NAMES[index]


def one_hot(index: int) -> np.ndarray:
    if not 0 <= index < N_CLASSES:
        raise DataError(f"class index {index} outside 0..{N_CLASSES - 1}")
    vec = np.zeros(N_CLASSES)
    vec[index] = 1.0
    return vec


def one_hot_matrix(labels: np.ndarray) -> np.ndarray:
    """Row-per-sample indicator matrix, shape (n, 4)."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
        raise DataError("labels outside class range")
    out = np.zeros((labels.shape[0], N_CLASSES))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature centering and scaling constants, fitted on training rows."""

    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        scales = np.asarray(self.scales, dtype=np.float64)
        if means.shape != scales.shape or means.ndim != 1:
            raise DataError("means and scales must be 1-D arrays of equal length")
        if np.any(scales <= 0):
            raise DataError("all scales must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)


def fit_scaler(matrix: np.ndarray) -> ScalerParams:
    """Column means and population standard deviations (divide by n).

    Columns with exactly zero variance get scale 1 so the transform maps
    them to zero instead of dividing by zero.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty matrix")
    means = matrix.mean(axis=0)
    scales = matrix.std(axis=0)
    scales = np.where(scales == 0.0, 1.0, scales)
    return ScalerParams(means, scales)


def transform(params: ScalerParams, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[1] != params.means.shape[0]:
        raise DataError(
            f"matrix has {matrix.shape[1]} columns, scaler expects {params.means.shape[0]}"
        )
    return (matrix - params.means) / params.scales


def inverse_transform(params: ScalerParams, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[1] != params.means.shape[0]:
        raise DataError(
            f"matrix has {matrix.shape[1]} columns, scaler expects {params.means.shape[0]}"
        )
    return matrix * params.scales + params.means


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ModelError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Classic in-place shuffle of 0..n-1 driven by the given generator."""
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _split_point(n: int, fraction: float) -> int:
    n_train = int(np.floor(fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise ModelError(
            f"degenerate split: {n} rows at fraction {fraction} leaves an empty side"
        )
    return n_train


def shuffle_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then cut at floor(train_fraction * n).

    Stratified mode shuffles and cuts each class separately, concatenates
    the per-class parts in class-index order and re-shuffles each side with
    a derived stream so row order carries no class signal.
    """
    if ds.n < 2:
        raise ModelError("need at least 2 rows to split")
    if not spec.stratified:
        perm = fisher_yates(ds.n, np.random.default_rng(spec.seed))
        cut = _split_point(ds.n, spec.train_fraction)
        return ds.take(perm[:cut]), ds.take(perm[cut:])

    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for k in range(N_CLASSES):
        members = np.nonzero(ds.labels == k)[0]
        if members.size == 0:
            continue
        if members.size < 2:
            # A singleton class cannot give both sides a row; keep it in train.
            train_parts.append(members)
            continue
        perm = fisher_yates(members.size, np.random.default_rng([spec.seed, k]))
        cut = _split_point(members.size, spec.train_fraction)
        train_parts.append(members[perm[:cut]])
        test_parts.append(members[perm[cut:]])
    train_idx = np.concatenate(train_parts) if train_parts else np.empty(0, np.int64)
    test_idx = np.concatenate(test_parts) if test_parts else np.empty(0, np.int64)
    if train_idx.size == 0 or test_idx.size == 0:
        raise ModelError("degenerate stratified split: one side is empty")
    train_idx = train_idx[
        fisher_yates(train_idx.size, np.random.default_rng([spec.seed, _TRAIN_RESHUFFLE_TAG]))
    ]
    test_idx = test_idx[
        fisher_yates(test_idx.size, np.random.default_rng([spec.seed, _TEST_RESHUFFLE_TAG]))
    ]
    return ds.take(train_idx), ds.take(test_idx)


def kfold_indices(n: int, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded permutation cut into ``folds`` contiguous test blocks.

    The first ``n % folds`` folds receive one extra row. Returns
    (train_indices, test_indices) per fold.
    """
    if folds < 2:
        raise ModelError(f"cv folds must be >= 2, got {folds}")
    if n < folds:
        raise ModelError(f"cannot make {folds} folds from {n} rows")
    perm = fisher_yates(n, np.random.default_rng(seed))
    base = n // folds
    remainder = n % folds
    out = []
    start = 0
    for f in range(folds):
        size = base + (1 if f < remainder else 0)
        test = perm[start : start + size]
        train = np.concatenate([perm[:start], perm[start + size :]])
        out.append((train, test))
        start += size
    return out

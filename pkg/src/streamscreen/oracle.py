"""Offline reference computations used to judge the streaming pipeline.

Everything here works on the full in-memory data and mirrors the streaming
conventions (population variance, natural log, Gini split candidates at bin
boundaries, equal values never split across bins), so that any remaining
online/offline difference comes from sketch approximation alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criteria import chi_square, gini_index, mutual_information
from .discretize import BinCounts
from .engine import MEANVAR_METHODS, Ranking, ScoreVector, canonical_method
from .exceptions import DegenerateScoreError, InvalidInputError


@dataclass
class DenseDataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise InvalidInputError("X must be n x p and y of length n")

    def classes(self):
        """Labels in first-seen order, matching the streaming class ids."""
        _, first = np.unique(self.y, return_index=True)
        return self.y[np.sort(first)]


def _cutoff_values(column: np.ndarray, k_bins: int):
    values, counts = np.unique(column, return_counts=True)
    cum = np.cumsum(counts)
    step = len(column) // k_bins
    positions = step * np.arange(1, k_bins)
    # Boundary after the first distinct value whose cumulative count
    # reaches the cutoff position.
    return values[np.searchsorted(cum, positions, side="left")]


def offline_bins(column, k_bins: int) -> BinCounts:
    column = np.asarray(column, dtype=float)
    n = column.shape[0]
    if n < k_bins:
        raise InvalidInputError(f"need at least {k_bins} values, got {n}")
    cut = _cutoff_values(column, k_bins)
    ordered = np.sort(column)
    below = np.searchsorted(ordered, cut, side="right")
    counts = np.diff(np.r_[0, below, n]).astype(float)
    return BinCounts(counts, cut, float(n))


def offline_table(column, labels, k_bins: int, classes=None) -> np.ndarray:
    column = np.asarray(column, dtype=float)
    labels = np.asarray(labels)
    if classes is None:
        classes = DenseDataset(column[:, None], labels).classes()
    cut = _cutoff_values(column, k_bins)
    joint = np.zeros((k_bins, len(classes)))
    for c, lab in enumerate(classes):
        ordered = np.sort(column[labels == lab])
        below = np.searchsorted(ordered, cut, side="right")
        joint[:, c] = np.diff(np.r_[0, below, ordered.shape[0]])
    return joint


def offline_tables(data: DenseDataset, k_bins: int) -> np.ndarray:
    classes = data.classes()
    return np.stack(
        [offline_table(data.X[:, j], data.y, k_bins, classes) for j in range(data.X.shape[1])]
    )


def _exact_column_means(block: np.ndarray) -> np.ndarray:
    # Correctly rounded sums keep the reference free of accumulation error.
    return np.array([math.fsum(col) for col in block.T]) / block.shape[0]


def _batch_moments(data: DenseDataset):
    classes = data.classes()
    n = np.array([np.sum(data.y == c) for c in classes], dtype=float)
    mean = np.stack([_exact_column_means(data.X[data.y == c]) for c in classes])
    ms = np.stack([_exact_column_means(data.X[data.y == c] ** 2) for c in classes])
    var = ms - mean**2
    var[var <= 1e-10 * np.abs(ms)] = 0.0
    return n, mean, var


def offline_score(data: DenseDataset, method: str, k_bins: int = 5) -> ScoreVector:
    method = canonical_method(method)
    classes = data.classes()
    if len(classes) < 2:
        raise DegenerateScoreError(f"{method} needs at least two classes")
    if method in MEANVAR_METHODS:
        n, mean, var = _batch_moments(data)
        if method == "t_score":
            if len(classes) != 2:
                raise DegenerateScoreError("T-score needs exactly two classes")
            diff = np.abs(mean[0] - mean[1])
            den = np.sqrt(var[0] / n[0] + var[1] / n[1])
            same = diff <= 1e-10 * np.maximum(np.abs(mean[0]), np.abs(mean[1]))
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(den > 0, diff / den, np.where(same, 0.0, np.inf))
        else:
            overall = _exact_column_means(data.X)
            num = (n[:, None] * (mean - overall) ** 2).sum(axis=0)
            den = (n[:, None] * var).sum(axis=0)
            tiny = num <= 1e-20 * (n[:, None] * mean**2).sum(axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(den > 0, num / den, np.where(tiny, 0.0, np.inf))
    else:
        tables = offline_tables(data, k_bins)
        fn = {"mutual_info": mutual_information, "chi_square": chi_square, "gini": gini_index}
        scores = fn[method](tables)
    return ScoreVector(np.asarray(scores, dtype=float), method, method != "gini")


def score_diff_ratio(online: ScoreVector, offline: ScoreVector) -> float:
    """Mean absolute score difference, normalised by the offline score range."""
    on = np.asarray(getattr(online, "scores", online), dtype=float)
    off = np.asarray(getattr(offline, "scores", offline), dtype=float)
    if on.shape != off.shape:
        raise InvalidInputError("score vectors differ in length")
    span = off.max() - off.min()
    if not span > 0 or not math.isfinite(span):
        raise InvalidInputError("offline scores have no finite range")
    return float(np.mean(np.abs(on - off)) / span)


def misrank_ratio(online: Ranking, offline: Ranking, top_fraction: float = 0.1) -> float:
    """Share of the offline top features whose online rank is different."""
    if not 0.0 < top_fraction <= 1.0:
        raise InvalidInputError("top_fraction must lie in (0, 1]")
    p = offline.order.shape[0]
    top = offline.order[: math.ceil(top_fraction * p)]
    return float(np.mean(online.rank_of[top] != offline.rank_of[top]))


def count_difference(online_tables, offline_tables) -> float:
    """Average absolute count difference per feature per bin (classes summed)."""
    on = np.asarray(online_tables, dtype=float)
    off = np.asarray(offline_tables, dtype=float)
    if on.shape != off.shape:
        raise InvalidInputError("table stacks differ in shape")
    return float(np.abs(on - off).sum(axis=-1).mean())

"""Near-equal-frequency binning of a finalized summary and class tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DegenerateScoreError, InvalidInputError
from .sketch import SubSummary, pool


@dataclass
class BinCounts:
    counts: np.ndarray
    cutoff_values: np.ndarray
    n_total: float


@dataclass
class BinTable:
    """Bins x classes contingency counts for one feature."""

    joint: np.ndarray

    @property
    def row_totals(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    @property
    def n(self) -> float:
        return float(self.joint.sum())


def cutoff_positions(n_total: float, k_bins: int) -> np.ndarray:
    step = np.floor(n_total / k_bins)
    return step * np.arange(1, k_bins)


def aggregate_bins(summary: SubSummary, n_total: float, k_bins: int) -> BinCounts:
    """Sweep tuples in value order, closing a bin once the running mass
    reaches the next cutoff position ``i * floor(N / K)``.

    A tuple is never split; when one tuple crosses several cutoffs the
    skipped bins stay empty and share the same cutoff value.
    """
    if k_bins < 2:
        raise InvalidInputError(f"need at least 2 bins, got {k_bins}")
    if len(summary) == 0:
        return BinCounts(np.zeros(k_bins), np.full(k_bins - 1, np.nan), float(n_total))
    pos = cutoff_positions(n_total, k_bins)
    running = np.cumsum(summary.weights)
    # Index of the tuple that closes each bin (first running mass >= cutoff).
    closing = np.searchsorted(running, pos, side="left")
    closing = np.minimum(closing, len(summary) - 1)
    cutoffs = summary.values[closing]
    counts = np.diff(np.r_[0.0, running[closing], running[-1]])
    return BinCounts(counts, cutoffs, float(n_total))


def build_table(per_class: Sequence[SubSummary], k_bins: int) -> BinTable:
    """Shared bins from the merged class summaries; per-class counts are the
    class summary's mass between consecutive cutoff values."""
    if len(per_class) < 2:
        raise DegenerateScoreError("a bin table needs at least two classes")
    combined = pool(*per_class)
    if len(combined) == 0:
        raise DegenerateScoreError("all class summaries are empty")
    bins = aggregate_bins(combined, combined.total_weight, k_bins)
    joint = np.zeros((k_bins, len(per_class)))
    for c, s in enumerate(per_class):
        if len(s) == 0:
            continue
        below = s.rank_le(bins.cutoff_values)
        edges = np.r_[0.0, below, s.total_weight]
        joint[:, c] = np.diff(edges)
    return BinTable(joint)

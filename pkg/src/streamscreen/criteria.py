"""Bin-count criteria: mutual information, chi-square and Gini index.

Every function takes a joint count array of shape ``(..., bins, classes)``
(or a :class:`BinTable`) and returns one score per leading index.  Counts
may be fractional, as produced by fading-factor decay.
"""

from __future__ import annotations

import numpy as np

from .discretize import BinTable
from .exceptions import DegenerateScoreError


def _joint(table) -> np.ndarray:
    joint = table.joint if isinstance(table, BinTable) else table
    joint = np.asarray(joint, dtype=float)
    if joint.ndim < 2:
        raise ValueError("joint counts must be at least 2-D (bins x classes)")
    if np.any(joint.sum(axis=(-2, -1)) <= 0):
        raise DegenerateScoreError("empty contingency table")
    return joint


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def mutual_information(table):
    """Natural-log mutual information between bin membership and class."""
    joint = _joint(table)
    n = joint.sum(axis=(-2, -1), keepdims=True)
    p = joint / n
    pb = p.sum(axis=-1, keepdims=True)
    pc = p.sum(axis=-2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * np.log(p / (pb * pc))
    terms = np.where(p > 0, terms, 0.0)
    return _scalar(terms.sum(axis=(-2, -1)))


def chi_square(table):
    """Pearson chi-square; cells with zero expected count are skipped."""
    joint = _joint(table)
    n = joint.sum(axis=(-2, -1), keepdims=True)
    expected = joint.sum(axis=-1, keepdims=True) * joint.sum(axis=-2, keepdims=True) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (joint - expected) ** 2 / expected
    terms = np.where(expected > 0, terms, 0.0)
    return _scalar(terms.sum(axis=(-2, -1)))


def _impurity(counts, totals):
    with np.errstate(divide="ignore", invalid="ignore"):
        share = counts / totals[..., None]
    gini = 1.0 - np.sum(share**2, axis=-1)
    return np.where(totals > 0, gini, 0.0)


def gini_index(table):
    """Minimum weighted Gini impurity over splits at the bin boundaries.

    Split ``i`` puts bins ``1..i`` on the left.  An empty side contributes 0.
    """
    joint = _joint(table)
    n_bins = joint.shape[-2]
    if n_bins < 2:
        raise DegenerateScoreError("Gini index needs at least two bins")
    n = joint.sum(axis=(-2, -1))
    left = np.cumsum(joint, axis=-2)[..., :-1, :]
    right = joint.sum(axis=-2, keepdims=True) - left
    nl = left.sum(axis=-1)
    nr = right.sum(axis=-1)
    split = (nl * _impurity(left, nl) + nr * _impurity(right, nr)) / n[..., None]
    return _scalar(split.min(axis=-1))


BIN_CRITERIA = {
    "mutual_info": mutual_information,
    "chi_square": chi_square,
    "gini": gini_index,
}

"""Running per-class moments and the T-score / Fisher score built on them.

Four update modes are supported:

plain
    running mean and mean-of-squares, ``mu_n = (n-1)/n * mu_{n-1} + x/n``.
sparse
    the same recursion over explicit entries only; implicit zeros are
    accounted for at query time by rescaling with the full class count.
adaptive
    fading-factor sums ``S_n = alpha * S_{n-1} + x`` for x and x**2; the
    class weight is the decayed count kept by the same recursion with x = 1.
sparse_adaptive
    as adaptive, but a feature is only touched on explicit entries; a time
    anchor per (class, feature) lets the skipped zero arrivals be caught up
    with a single ``alpha**(n - n_last - 1)`` penalty.

Time is the global sample index, so in the adaptive modes every class fades
on every arrival, whatever its label.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError, DegenerateScoreError, InvalidInputError

_VAR_RTOL = 1e-10


def _grow(a, shape, fill=0.0):
    if a.shape == shape:
        return a
    out = np.full(shape, fill, dtype=a.dtype)
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


class ClassStats:
    """Sufficient statistics for every (class, feature) pair."""

    def __init__(self, n_features=0, sparse=False, alpha=None):
        if alpha is not None and not 0.0 < alpha < 1.0:
            raise ConfigurationError(f"fading factor must lie in (0, 1), got {alpha}")
        self.sparse = bool(sparse)
        self.alpha = alpha
        self.t = 0
        self.weight = np.zeros(0)
        shape = (0, int(n_features))
        self.first = np.zeros(shape)
        self.second = np.zeros(shape)
        self.explicit = np.zeros(shape)
        self.last = np.zeros(shape, dtype=np.int64)

    @property
    def mode(self) -> str:
        if self.alpha is None:
            return "sparse" if self.sparse else "plain"
        return "sparse_adaptive" if self.sparse else "adaptive"

    @property
    def n_classes(self) -> int:
        return self.weight.shape[0]

    @property
    def n_features(self) -> int:
        return self.first.shape[1]

    def resize(self, n_classes=None, n_features=None):
        c = max(self.n_classes, n_classes or 0)
        p = max(self.n_features, n_features or 0)
        self.weight = _grow(self.weight, (c,))
        self.first = _grow(self.first, (c, p))
        self.second = _grow(self.second, (c, p))
        self.explicit = _grow(self.explicit, (c, p))
        self.last = _grow(self.last, (c, p))

    def _tick(self, c):
        self.t += 1
        self.resize(n_classes=c + 1)
        if self.alpha is None:
            self.weight[c] += 1.0
        else:
            self.weight *= self.alpha
            self.weight[c] += 1.0

    def update(self, c: int, x) -> None:
        """Dense sample of class ``c``; ``x`` holds every feature value."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise InvalidInputError(
                f"expected {self.n_features} feature values, got {x.shape[0]}"
            )
        if self.sparse:
            idx = np.arange(self.n_features)
            self.update_sparse(c, idx, x)
            return
        self._tick(c)
        if self.alpha is None:
            n = self.weight[c]
            self.first[c] = (n - 1) / n * self.first[c] + x / n
            self.second[c] = (n - 1) / n * self.second[c] + x * x / n
        else:
            self._adaptive_step(c, slice(None), x)

    def update_sparse(self, c: int, idx, values) -> None:
        """Sample of class ``c`` with explicit entries only."""
        idx = np.asarray(idx, dtype=np.intp)
        values = np.asarray(values, dtype=float)
        self._tick(c)
        if idx.size and idx.max() >= self.n_features:
            self.resize(n_features=int(idx.max()) + 1)
        if self.alpha is None:
            self.explicit[c, idx] += 1.0
            m = self.explicit[c, idx]
            self.first[c, idx] = (m - 1) / m * self.first[c, idx] + values / m
            self.second[c, idx] = (m - 1) / m * self.second[c, idx] + values * values / m
        else:
            self.explicit[c, idx] += 1.0
            self._adaptive_step(c, idx, values)

    def _adaptive_step(self, c, idx, x):
        a = self.alpha
        gap = self.t - self.last[c, idx] - 1
        catch_up = np.power(a, gap)
        self.first[c, idx] = a * (catch_up * self.first[c, idx]) + x
        self.second[c, idx] = a * (catch_up * self.second[c, idx]) + x * x
        self.last[c, idx] = self.t

    def decayed_sums(self):
        """Fading-factor sums of x and x**2 brought forward to the current time."""
        f = np.power(self.alpha, self.t - self.last)
        return self.first * f, self.second * f

    def moments(self):
        """Return ``(n_c, mean, var)`` with population variance ``MS - mean**2``.

        ``n_c`` is the class count, or the decayed class weight in the
        adaptive modes.
        """
        n = self.weight.copy()
        safe = np.where(n > 0, n, 1.0)[:, None]
        if self.alpha is None:
            if self.sparse:
                mean = self.first * self.explicit / safe
                ms = self.second * self.explicit / safe
            else:
                mean = self.first.copy()
                ms = self.second.copy()
        else:
            s1, s2 = self.decayed_sums()
            mean = s1 / safe
            ms = s2 / safe
        var = ms - mean * mean
        var = np.where(var <= _VAR_RTOL * np.abs(ms), 0.0, var)
        return n, mean, var


def t_score(mean1, var1, n1, mean2, var2, n2):
    """``|mu1 - mu2| / sqrt(var1/n1 + var2/n2)``.

    A zero denominator gives ``inf`` for distinct means and 0 otherwise.
    """
    mean1, var1, mean2, var2 = (np.asarray(a, dtype=float) for a in (mean1, var1, mean2, var2))
    diff = np.abs(mean1 - mean2)
    den = np.sqrt(var1 / n1 + var2 / n2)
    scale = np.maximum(np.abs(mean1), np.abs(mean2))
    same = diff <= _VAR_RTOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, diff / np.where(den > 0, den, 1.0), np.where(same, 0.0, np.inf))
    return float(out) if out.ndim == 0 else out


def fisher_score(n, mean, var):
    """Between-class over within-class scatter for ``C`` classes.

    ``n`` has shape ``(C,)``; ``mean`` and ``var`` have shape ``(C, ...)``.
    """
    n = np.asarray(n, dtype=float)
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    if n.shape[0] < 2:
        raise DegenerateScoreError("Fisher score needs at least two classes")
    w = n.reshape((-1,) + (1,) * (mean.ndim - 1))
    overall = (w * mean).sum(axis=0) / n.sum()
    num = (w * (mean - overall) ** 2).sum(axis=0)
    den = (w * var).sum(axis=0)
    scale = (w * mean * mean).sum(axis=0)
    tiny = num <= _VAR_RTOL**2 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(tiny, 0.0, np.inf))
    return float(out) if out.ndim == 0 else out


def stats_t_score(stats: ClassStats, classes=(0, 1)):
    if stats.n_classes < 2:
        raise DegenerateScoreError("T-score needs two classes")
    if stats.n_classes > 2:
        raise DegenerateScoreError("T-score is defined for exactly two classes")
    n, mean, var = stats.moments()
    a, b = classes
    return t_score(mean[a], var[a], n[a], mean[b], var[b], n[b])


def stats_fisher_score(stats: ClassStats):
    if stats.n_classes < 2:
        raise DegenerateScoreError("Fisher score needs at least two classes")
    n, mean, var = stats.moments()
    return fisher_score(n, mean, var)

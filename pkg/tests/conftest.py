import numpy as np
import pytest

from streamscreen.engine import Screener, ScreenerConfig
from streamscreen.sketch import StreamSketch


class EagerDecaySketch(StreamSketch):
    """Reference sketch that fades every retained weight on every tick.

    Buffered weights follow ``W = alpha * W`` per arrival and every level and
    closed summary is rescaled by ``alpha`` at each step, so nothing is
    deferred.  Only used to check the deferred two-part scheme.
    """

    def _tick_to(self, t):
        while self.time < t:
            self.time += 1
            self._bw = [w * self.alpha for w in self._bw]
            self._bt = [self.time] * len(self._bt)
            self.decay_flush()

    def insert(self, value, weight=1.0, time=None):
        t = self.time + 1 if time is None else int(time)
        self._tick_to(t)
        return super().insert(value, weight, t)

    def insert_many(self, values, weights=None, times=None):
        values = np.asarray(values, dtype=float).ravel()
        weights = np.ones(values.shape[0]) if weights is None else np.asarray(weights, float)
        if times is None:
            times = self.time + 1 + np.arange(values.shape[0])
        for v, w, t in zip(values, weights, times):
            self.insert(v, w, int(t))
        return self

    def advance_to(self, time):
        self._tick_to(int(time))


def eager_screener(config: ScreenerConfig) -> Screener:
    eng = Screener(config)
    eng._new_sketch = lambda: EagerDecaySketch(config.epsilon, config.decay)
    return eng


def make_dataset(rng, n, p, n_classes=2, informative=3, zero_rate=0.0, rounding=None):
    """Gaussian features whose first ``informative`` columns shift with the class."""
    y = rng.integers(0, n_classes, size=n)
    X = rng.standard_normal((n, p))
    for j in range(min(informative, p)):
        X[:, j] += (0.6 + 0.3 * j) * y
    if rounding is not None:
        X = np.round(X, rounding)
    if zero_rate:
        X[rng.random((n, p)) < zero_rate] = 0.0
    return X, y


def feed(engine: Screener, X, y, batch=None):
    batch = batch or engine.config.minibatch
    for lo in range(0, X.shape[0], batch):
        hi = min(X.shape[0], lo + batch)
        engine.observe_batch(list(zip(X[lo:hi], y[lo:hi].tolist())))
    return engine


def feed_sparse(engine: Screener, X, y):
    for x, label in zip(X, y.tolist()):
        nz = np.flatnonzero(x)
        engine.observe((nz, x[nz]), label)
    return engine


def max_rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    same_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    a = np.where(same_inf, 0.0, a)
    b = np.where(same_inf, 0.0, b)
    scale = np.maximum(np.abs(a), np.abs(b))
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(diff == 0, 0.0, diff / scale)
    return float(rel.max()) if rel.size else 0.0


def true_rank_error(sorted_data, value, d):
    """Distance from ``d`` to the rank interval occupied by ``value``."""
    lo = np.searchsorted(sorted_data, value, side="left")
    hi = np.searchsorted(sorted_data, value, side="right")
    return np.maximum(0.0, np.maximum(lo - d, d - hi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

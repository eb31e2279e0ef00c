"""Streaming feature screener: ingestion, sparse bookkeeping and scoring."""

from __future__ import annotations

import pickle
from dataclasses import asdict, dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .criteria import BIN_CRITERIA
from .discretize import build_table
from .exceptions import (
    ConfigurationError,
    DegenerateScoreError,
    InvalidInputError,
)
from .moments import ClassStats, fisher_score, t_score
from .sketch import StreamSketch

MEANVAR_METHODS = ("t_score", "fisher")
BINCOUNT_METHODS = ("gini", "chi_square", "mutual_info")
METHODS = MEANVAR_METHODS + BINCOUNT_METHODS

_ALIASES = {
    "t": "t_score",
    "tscore": "t_score",
    "t-score": "t_score",
    "fisher_score": "fisher",
    "mi": "mutual_info",
    "mutual_information": "mutual_info",
    "chi2": "chi_square",
    "chi-square": "chi_square",
    "gini_index": "gini",
}

_SNAPSHOT_MAGIC = b"STSCREEN"
_SNAPSHOT_VERSION = 1

# Recovered zero weights below this fraction of the class weight are
# cancellation noise, not skipped samples.
_RECOVERY_RTOL = 1e-12


def canonical_method(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in METHODS:
        raise ConfigurationError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


def method_family(method: str) -> str:
    return "meanvar" if canonical_method(method) in MEANVAR_METHODS else "bincount"


@dataclass
class ScreenerConfig:
    method: str = "mutual_info"
    epsilon: float = 0.001
    k_bins: int = 5
    alpha: Optional[float] = None
    # Number of arrivals over which ``alpha`` is applied once; the per-arrival
    # factor is ``alpha ** (1 / fading_period)``.
    fading_period: int = 1
    minibatch: int = 250
    sparse: bool = False
    feature_count: Optional[int] = None

    def __post_init__(self):
        self.method = canonical_method(self.method)
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.k_bins < 2:
            raise ConfigurationError(f"need at least 2 bins, got {self.k_bins}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.fading_period < 1:
            raise ConfigurationError("fading_period must be a positive integer")
        if self.minibatch < 1:
            raise ConfigurationError("minibatch must be a positive integer")
        if self.feature_count is not None and self.feature_count < 1:
            raise ConfigurationError("feature_count must be positive")

    @property
    def family(self) -> str:
        return method_family(self.method)

    @property
    def decay(self) -> Optional[float]:
        """Per-arrival fading factor, or None without adaptation."""
        if self.alpha is None:
            return None
        return self.alpha ** (1.0 / self.fading_period)


@dataclass
class ScoreVector:
    scores: np.ndarray
    method: str
    higher_is_better: bool

    def __len__(self):
        return self.scores.shape[0]


@dataclass
class Ranking:
    order: np.ndarray
    rank_of: np.ndarray
    nan_features: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))


def rank(scores: ScoreVector) -> Ranking:
    """Rank 1 is the most important feature; ties go to the lower index.

    Gini ranks ascending, every other criterion descending.  NaN scores are
    placed last and listed in ``nan_features``.
    """
    s = np.asarray(scores.scores, dtype=float)
    if s.size == 0:
        raise InvalidInputError("cannot rank an empty score vector")
    nan = np.isnan(s)
    key = np.where(nan, 0.0, s if not scores.higher_is_better else -s)
    order = np.lexsort((np.arange(s.size), key, nan))
    rank_of = np.empty(s.size, dtype=np.intp)
    rank_of[order] = np.arange(1, s.size + 1)
    return Ranking(order, rank_of, np.flatnonzero(nan))


def select_top_k(ranking: Ranking, k: int) -> np.ndarray:
    p = ranking.order.shape[0]
    if not 1 <= k <= p:
        raise InvalidInputError(f"k must lie in [1, {p}], got {k}")
    return ranking.order[:k].copy()


class UniversalWeightMap:
    """Per-class (decayed) sample weight shared by all features.

    Without decay it is a plain class counter.  Recovering the weight of the
    zeros a feature skipped since its anchor ``a`` needs only the current
    totals and the totals snapshotted at ``a``:
    ``M_now - M_a * alpha**(now - a)``.
    """

    def __init__(self, alpha: Optional[float] = None):
        self.alpha = alpha
        self.t = 0
        self.totals = np.zeros(0)

    def ensure(self, n_classes: int) -> None:
        if n_classes > self.totals.shape[0]:
            self.totals = np.r_[self.totals, np.zeros(n_classes - self.totals.shape[0])]

    def update(self, c: int) -> None:
        self.ensure(c + 1)
        if self.alpha is not None:
            self.totals *= self.alpha
        self.totals[c] += 1.0
        self.t += 1

    def recovered(self, snapshot: np.ndarray, anchor: int) -> np.ndarray:
        snap = np.zeros(self.totals.shape)
        snap[: snapshot.shape[0]] = snapshot
        if self.alpha is None:
            return self.totals - snap
        return self.totals - snap * self.alpha ** (self.t - anchor)


def _as_pairs(entries) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(entries, tuple) and len(entries) == 2 and isinstance(entries[0], np.ndarray):
        idx, vals = entries
    else:
        entries = list(entries)
        if entries:
            idx, vals = zip(*entries)
        else:
            idx, vals = (), ()
    idx = np.asarray(idx, dtype=np.intp)
    vals = np.asarray(vals, dtype=float)
    if idx.size:
        if idx.min() < 0:
            raise InvalidInputError("negative feature index")
        if np.any(np.diff(idx) <= 0):
            raise InvalidInputError("sparse indices must be strictly increasing")
    if np.isnan(vals).any():
        raise InvalidInputError("NaN feature value")
    return idx, vals


class Screener:
    """Online feature screener for one criterion.

    Samples are fed with :meth:`observe` or :meth:`observe_batch`; scores are
    available at any time through :meth:`scores` and do not disturb the
    stream state.  Dense samples are sequences of ``feature_count`` values;
    sparse samples are ``(index, value)`` pairs with 0-based, strictly
    increasing indices.  Labels are arbitrary hashable tokens.
    """

    def __init__(self, config: Optional[ScreenerConfig] = None, **kwargs):
        if config is None:
            config = ScreenerConfig(**kwargs)
        elif kwargs:
            raise TypeError("pass either a config or keyword arguments")
        self.config = config
        self.t = 0
        self.labels: Dict[Hashable, int] = {}
        self.n_features = config.feature_count or 0
        decay = config.decay
        if config.family == "meanvar":
            self._stats = ClassStats(self.n_features, sparse=config.sparse, alpha=decay)
        else:
            self._weights = UniversalWeightMap(decay)
            self._sketches: List[List[StreamSketch]] = []
            self._explicit = np.zeros((self.n_features, 0))
            self._anchor = np.zeros(self.n_features, dtype=np.int64)
            self._snapshot = np.zeros((self.n_features, 0))

    # ------------------------------------------------------------------ setup

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def label_tokens(self) -> List[Hashable]:
        return list(self.labels)

    def _class_id(self, label) -> int:
        c = self.labels.get(label)
        if c is not None:
            return c
        if self.config.method == "t_score" and len(self.labels) >= 2:
            raise InvalidInputError(
                f"T-score is a two-class criterion; unexpected third label {label!r}"
            )
        c = len(self.labels)
        self.labels[label] = c
        if self.config.family == "bincount":
            self._add_class()
        return c

    def _new_sketch(self) -> StreamSketch:
        return StreamSketch(self.config.epsilon, self.config.decay)

    def _add_class(self) -> None:
        self._weights.ensure(self.n_classes)
        self._sketches.append([self._new_sketch() for _ in range(self.n_features)])
        self._explicit = np.c_[self._explicit, np.zeros(self.n_features)]
        self._snapshot = np.c_[self._snapshot, np.zeros(self.n_features)]

    def _grow_features(self, p: int) -> None:
        if p <= self.n_features:
            return
        if self.config.feature_count is not None:
            raise InvalidInputError(
                f"feature index {p - 1} outside the declared {self.config.feature_count} features"
            )
        extra = p - self.n_features
        if self.config.family == "meanvar":
            self._stats.resize(n_features=p)
        else:
            for row in self._sketches:
                row.extend(self._new_sketch() for _ in range(extra))
            c = self.n_classes
            self._explicit = np.r_[self._explicit, np.zeros((extra, c))]
            self._snapshot = np.r_[self._snapshot, np.zeros((extra, c))]
            # New features start with a full zero history from time 0.
            self._anchor = np.r_[self._anchor, np.zeros(extra, dtype=np.int64)]
        self.n_features = p

    def _dense_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if self.n_features == 0 and self.config.feature_count is None:
            self._grow_features(x.shape[0])
        if x.shape[0] != self.n_features:
            raise InvalidInputError(f"expected {self.n_features} feature values, got {x.shape[0]}")
        if np.isnan(x).any():
            raise InvalidInputError("NaN feature value")
        return x

    # -------------------------------------------------------------- ingestion

    def observe(self, x, label) -> "Screener":
        if self.config.sparse:
            self._observe_sparse(*_as_pairs(x), label)
        elif self.config.family == "meanvar":
            x = self._dense_vector(x)
            self._stats.update(self._class_id(label), x)
            self.t += 1
        else:
            x = self._dense_vector(x)
            self._observe_dense_rows(x[None, :], [self._class_id(label)])
        return self

    def observe_batch(self, samples: Sequence) -> "Screener":
        """Ingest ``(x, label)`` pairs; same result as observing them in order."""
        samples = list(samples)
        if len(samples) > self.config.minibatch:
            raise InvalidInputError(
                f"batch of {len(samples)} exceeds minibatch capacity {self.config.minibatch}"
            )
        if not samples:
            return self
        if self.config.sparse or self.config.family == "meanvar":
            for x, label in samples:
                self.observe(x, label)
            return self
        rows = np.vstack([self._dense_vector(x) for x, _ in samples])
        classes = [self._class_id(label) for _, label in samples]
        self._observe_dense_rows(rows, classes)
        return self

    def _observe_dense_rows(self, rows: np.ndarray, classes: Sequence[int]) -> None:
        classes = np.asarray(classes)
        times = self.t + 1 + np.arange(rows.shape[0])
        for c in classes:
            self._weights.update(int(c))
        self.t += rows.shape[0]
        for c in np.unique(classes):
            mask = classes == c
            block = rows[mask]
            ts = times[mask]
            sketches = self._sketches[c]
            for j in range(self.n_features):
                sketches[j].insert_many(block[:, j], times=ts)

    def _observe_sparse(self, idx: np.ndarray, vals: np.ndarray, label) -> None:
        c = self._class_id(label)
        if idx.size:
            self._grow_features(int(idx[-1]) + 1)
        if self.config.family == "meanvar":
            self._stats.update_sparse(c, idx, vals)
            self.t += 1
            return
        before = self._weights.totals.copy()
        prev_t = self.t
        self._weights.update(c)
        self.t += 1
        decay = self.config.decay
        for j, v in zip(idx.tolist(), vals.tolist()):
            if decay is None:
                self._explicit[j, c] += 1.0
            else:
                lump = before - self._snapshot[j] * decay ** (prev_t - self._anchor[j])
                for cc in np.flatnonzero(lump > _RECOVERY_RTOL * np.maximum(before, 1.0)):
                    self._sketches[cc][j].inject_zeros(lump[cc], time=prev_t)
                self._anchor[j] = self.t
                self._snapshot[j] = self._weights.totals
            self._sketches[c][j].insert(v, 1.0, time=self.t)

    # ---------------------------------------------------------------- scoring

    def _require_classes(self, method: str) -> None:
        if self.t == 0:
            raise DegenerateScoreError("no samples observed yet")
        if self.n_classes < 2:
            raise DegenerateScoreError(
                f"{method} compares classes and needs at least two; "
                f"only {self.n_classes} seen"
            )

    def class_summaries(self, j: int):
        """Finalized per-class summaries of feature ``j`` at the current time,
        including the weight of skipped zeros in sparse mode."""
        out = []
        for c in range(self.n_classes):
            sk = self._sketches[c][j]
            if self.config.sparse:
                lump = self._zero_weight(j, c)
                if lump > _RECOVERY_RTOL * max(self._weights.totals[c], 1.0):
                    sk = sk.copy()
                    sk.inject_zeros(lump, time=max(self.t, sk.time))
            out.append(sk.finalize(time=max(self.t, sk.time)))
        return out

    def _zero_weight(self, j: int, c: int) -> float:
        if self.config.decay is None:
            return float(self._weights.totals[c] - self._explicit[j, c])
        return float(
            self._weights.totals[c]
            - self._snapshot[j, c] * self.config.decay ** (self.t - self._anchor[j])
        )

    def bin_tables(self) -> np.ndarray:
        """Joint counts of shape ``(features, bins, classes)``."""
        if self.config.family != "bincount":
            raise ConfigurationError("bin tables exist only for bin-count methods")
        self._require_classes(self.config.method)
        # Every observation advances ``t``, so tables built at the current
        # time stay valid until the next sample arrives.
        cached = getattr(self, "_table_cache", None)
        if cached is not None and cached[0] == self.t:
            return cached[1].copy()
        k = self.config.k_bins
        tables = np.zeros((self.n_features, k, self.n_classes))
        for j in range(self.n_features):
            tables[j] = build_table(self.class_summaries(j), k).joint
        self._table_cache = (self.t, tables)
        return tables.copy()

    def scores(self, method: Optional[str] = None) -> ScoreVector:
        """Scores of every feature.

        ``method`` may name another criterion of the same family, so one
        stream pass can serve several bin-count (or mean-variance) criteria.
        """
        method = self.config.method if method is None else canonical_method(method)
        if method_family(method) != self.config.family:
            raise ConfigurationError(
                f"{method} cannot be computed from {self.config.family} state"
            )
        self._require_classes(method)
        if self.config.family == "meanvar":
            values = self._meanvar_scores(method)
        else:
            values = BIN_CRITERIA[method](self.bin_tables())
        return ScoreVector(np.asarray(values, dtype=float), method, method != "gini")

    def _meanvar_scores(self, method: str) -> np.ndarray:
        n, mean, var = self._stats.moments()
        if method == "t_score":
            if self.n_classes != 2:
                raise DegenerateScoreError("T-score needs exactly two classes")
            return t_score(mean[0], var[0], n[0], mean[1], var[1], n[1])
        return fisher_score(n, mean, var)

    def rank(self, method: Optional[str] = None) -> Ranking:
        return rank(self.scores(method))

    def select_top_k(self, k: int, method: Optional[str] = None) -> np.ndarray:
        return select_top_k(self.rank(method), k)

    # ------------------------------------------------------------- snapshots

    def to_bytes(self) -> bytes:
        state = dict(self.__dict__)
        state.pop("_table_cache", None)
        state["config"] = asdict(self.config)
        body = pickle.dumps(state, protocol=pickle.HIGHEST_PROTOCOL)
        return _SNAPSHOT_MAGIC + bytes([_SNAPSHOT_VERSION]) + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Screener":
        head = len(_SNAPSHOT_MAGIC)
        if blob[:head] != _SNAPSHOT_MAGIC:
            raise InvalidInputError("not a screener snapshot")
        version = blob[head]
        if version != _SNAPSHOT_VERSION:
            raise InvalidInputError(f"unsupported snapshot version {version}")
        state = pickle.loads(blob[head + 1 :])
        obj = cls.__new__(cls)
        state["config"] = ScreenerConfig(**state["config"])
        obj.__dict__.update(state)
        return obj

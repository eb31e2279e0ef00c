"""
Weighted epsilon-approximate quantile summary with exact tuple weights.

A summary is a value-sorted list of tuples ``(value, rmin, rmax, weight)``.
Every tuple doubles as a mini-bin: ``weight`` is the exact mass of the stream
points it covers, so bin counts can be read off the weights instead of being
estimated from ranks.

The streaming structure follows the classic multi-level scheme: recent points
are buffered raw, a full buffer is turned into an exact summary, halved by
PRUNE and cascaded through the levels with MERGE + PRUNE.  Since the stream
length is unknown, the stream is cut into sub-streams ``B_i`` of ``2**i/eps``
points; each finished sub-stream is pruned to ``2/eps`` tuples and kept aside.

Fading-factor decay is applied lazily: buffered points remember their arrival
time, and retained summaries are multiplied by ``alpha**k`` only when the
buffer is flushed or the sketch is finalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class SummaryTuple:
    value: float
    rmin: float
    rmax: float
    weight: float


class SubSummary:
    """Sorted tuples of one summary, stored column-wise.

    Instances are treated as immutable; every operation returns a new one.
    """

    __slots__ = ("values", "rmin", "rmax", "weights", "precision")

    def __init__(self, values, rmin, rmax, weights, precision=0.0):
        self.values = np.asarray(values, dtype=float)
        self.rmin = np.asarray(rmin, dtype=float)
        self.rmax = np.asarray(rmax, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.precision = float(precision)

    @classmethod
    def empty(cls) -> "SubSummary":
        e = np.empty(0)
        return cls(e, e, e, e, 0.0)

    @classmethod
    def from_points(cls, values, weights=None) -> "SubSummary":
        """Exact (0-approximate) summary of raw weighted points.

        Identical values are stacked into one tuple.
        """
        values = np.asarray(values, dtype=float)
        if weights is None:
            weights = np.ones(values.shape[0])
        else:
            weights = np.asarray(weights, dtype=float)
        if values.size == 0:
            return cls.empty()
        order = np.argsort(values, kind="stable")
        v = values[order]
        w = weights[order]
        starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
        uniq = v[starts]
        wsum = np.add.reduceat(w, starts)
        rmax = np.cumsum(wsum)
        rmin = np.r_[0.0, rmax[:-1]]
        return cls(uniq, rmin, rmax, wsum, 0.0)

    def __len__(self):
        return self.values.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def tuples(self) -> List[SummaryTuple]:
        return [
            SummaryTuple(float(v), float(a), float(b), float(w))
            for v, a, b, w in zip(self.values, self.rmin, self.rmax, self.weights)
        ]

    def scaled(self, factor: float) -> "SubSummary":
        return SubSummary(
            self.values,
            self.rmin * factor,
            self.rmax * factor,
            self.weights * factor,
            self.precision,
        )

    def rank_le(self, x) -> np.ndarray:
        """Summary mass at values ``<= x`` (tuple weights taken whole)."""
        x = np.asarray(x, dtype=float)
        if len(self) == 0:
            return np.zeros(x.shape)
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(self.values, x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def to_text(self) -> str:
        return "".join(
            f"{v!r}\t{a!r}\t{b!r}\t{w!r}\n"
            for v, a, b, w in zip(
                self.values.tolist(),
                self.rmin.tolist(),
                self.rmax.tolist(),
                self.weights.tolist(),
            )
        )

    def __repr__(self):
        return (
            f"SubSummary(size={len(self)}, total_weight={self.total_weight:g}, "
            f"precision={self.precision:g})"
        )


def _query_index(sub: SubSummary, d) -> np.ndarray:
    # Works on doubled quantities so the midpoints need no halving.
    d2 = 2.0 * np.asarray(d, dtype=float)
    mid2 = sub.rmin + sub.rmax
    k = len(sub)
    out = np.empty(d2.shape, dtype=np.intp)
    low = d2 < mid2[0]
    high = d2 >= mid2[k - 1]
    out[low] = 0
    out[high & ~low] = k - 1
    inner = ~(low | high)
    if inner.any():
        di = d2[inner]
        i = np.searchsorted(mid2, di, side="right") - 1
        j = i + 1
        bound = sub.rmin[i] + sub.weights[i] + sub.rmax[j] - sub.weights[j]
        out[inner] = np.where(di < bound, i, j)
    return out


def query(sub: SubSummary, d: float) -> float:
    """Value whose rank is closest to ``d`` (query function Q(s, d))."""
    if len(sub) == 0:
        raise InvalidInputError("query on an empty summary")
    total = sub.total_weight
    if not 0.0 <= d <= total:
        raise InvalidInputError(f"rank position {d} outside [0, {total}]")
    return float(sub.values[_query_index(sub, np.array([d]))[0]])


def query_many(sub: SubSummary, d) -> np.ndarray:
    if len(sub) == 0:
        raise InvalidInputError("query on an empty summary")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(d > sub.total_weight):
        raise InvalidInputError("rank position outside [0, total_weight]")
    return sub.values[_query_index(sub, d)]


def prune(sub: SubSummary, target: int) -> SubSummary:
    """Compress ``sub`` to at most ``target + 1`` tuples, conserving weight.

    Tuples are picked with the query function at positions
    ``i / target * w(s)`` for ``i = 0..target``.  Each kept tuple absorbs the
    weight of every dropped tuple since the previous pick, and its rank range
    becomes ``[rmin(first absorbed), rmax(kept)]``.
    """
    if target < 2:
        raise InvalidInputError(f"prune target must be >= 2, got {target}")
    k = len(sub)
    if k <= target + 1:
        return sub
    total = sub.total_weight
    d = np.arange(target + 1, dtype=float) * total / target
    d[-1] = total
    picks = np.unique(_query_index(sub, d))
    starts = np.r_[0, picks[:-1] + 1]
    return SubSummary(
        sub.values[picks],
        sub.rmin[starts],
        sub.rmax[picks],
        np.add.reduceat(sub.weights, starts),
        sub.precision + 1.0 / (2 * target),
    )


def merge(*subs: SubSummary) -> SubSummary:
    """Combine summaries; ranks and weights of equal values add up.

    For a value missing from one input, that input contributes the mass of
    its tuples strictly below the value to both rank bounds.
    """
    subs = [s for s in subs if len(s)]
    if not subs:
        return SubSummary.empty()
    if len(subs) == 1:
        return subs[0]
    allv = np.concatenate([s.values for s in subs])
    allv.sort(kind="stable")
    uniq = allv[np.r_[True, allv[1:] != allv[:-1]]]
    rmin = np.zeros(uniq.shape)
    rmax = np.zeros(uniq.shape)
    weights = np.zeros(uniq.shape)
    for s in subs:
        n = len(s)
        idx = np.searchsorted(s.values, uniq, side="left")
        safe = np.minimum(idx, n - 1)
        present = (idx < n) & (s.values[safe] == uniq)
        below = np.where(idx > 0, s.rmax[np.maximum(idx - 1, 0)], 0.0)
        rmin += np.where(present, s.rmin[safe], below)
        rmax += np.where(present, s.rmax[safe], below)
        weights += np.where(present, s.weights[safe], 0.0)
    return SubSummary(uniq, rmin, rmax, weights, max(s.precision for s in subs))


def pool(*subs: SubSummary) -> SubSummary:
    """Merge of tight summaries (``rmax - rmin == weight`` on every tuple).

    For tight inputs the general merge reduces to an exact summary of the
    pooled (value, weight) pairs, which this computes with one sort.
    """
    subs = [s for s in subs if len(s)]
    if not subs:
        return SubSummary.empty()
    out = SubSummary.from_points(
        np.concatenate([s.values for s in subs]), np.concatenate([s.weights for s in subs])
    )
    out.precision = max(s.precision for s in subs)
    return out


def _ceil(x: float) -> int:
    # Tolerates 1/eps being an integer up to rounding (e.g. 1/0.001).
    r = round(x)
    if abs(x - r) < 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def block_parameters(substream_size: int, epsilon: float):
    """Return ``(L, b)`` for a sub-stream of the given size.

    ``b = ceil(L / eps')`` with ``eps' = eps / 2`` and ``L`` the largest
    integer with ``b * 2**(L-1) <= size``.  When even ``L = 1`` does not fit,
    there are no levels and the buffer spans the whole sub-stream.
    """
    working = epsilon / 2.0
    levels = 0
    while True:
        cand = levels + 1
        b = _ceil(cand / working)
        if b * 2 ** (cand - 1) <= substream_size:
            levels = cand
        else:
            break
    if levels == 0:
        return 0, substream_size
    return levels, _ceil(levels / working)


class StreamSketch:
    """Single-stream quantile sketch with exact weights and optional decay.

    ``time`` is the sketch clock used by the fading factor.  Without an
    explicit ``time`` every insert is one arrival; the engine passes the
    global sample index instead, so weights also fade while other classes
    are arriving.
    """

    def __init__(self, epsilon: float, alpha: Optional[float] = None):
        if not 0.0 < epsilon < 1.0:
            raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
        if alpha is not None and not 0.0 < alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
        self.epsilon = float(epsilon)
        self.alpha = None if alpha is None else float(alpha)
        self.points_seen = 0
        self.time = 0
        self._penalized_at = 0
        self._bv: list = []
        self._bw: list = []
        self._bt: list = []
        self.levels: List[Optional[SubSummary]] = []
        self.closed: List[SubSummary] = []
        self.substream = -1
        self._open_substream(0)

    def _open_substream(self, i: int) -> None:
        unit = 1.0 / self.epsilon
        self.substream = i
        self._substream_start = _ceil((2**i - 1) * unit)
        self._substream_end = _ceil((2 ** (i + 1) - 1) * unit)
        size = self._substream_end - self._substream_start
        self.num_levels, self.block_size = block_parameters(size, self.epsilon)
        self.levels = [None] * max(self.num_levels, 1)

    @property
    def pending_decay_count(self) -> int:
        return self.time - self._penalized_at

    @property
    def buffered(self) -> int:
        return len(self._bv)

    def _advance(self, time) -> None:
        if time is None:
            self.time += 1
        else:
            time = int(time)
            if time < self.time:
                raise InvalidInputError(f"time {time} precedes sketch time {self.time}")
            self.time = time

    def advance_to(self, time: int) -> None:
        if time < self.time:
            raise InvalidInputError(f"time {time} precedes sketch time {self.time}")
        self.time = int(time)

    def insert(self, value: float, weight: float = 1.0, time: Optional[int] = None):
        value = float(value)
        weight = float(weight)
        if math.isnan(value):
            raise InvalidInputError("NaN value")
        if not weight > 0 or math.isinf(weight):
            raise InvalidInputError(f"weight must be positive and finite, got {weight}")
        self._advance(time)
        self._bv.append(value)
        self._bw.append(weight)
        self._bt.append(self.time)
        self.points_seen += 1
        self._after_push()
        return self

    def insert_many(self, values, weights=None, times=None):
        """Insert points in order; equivalent to repeated :meth:`insert`."""
        values = np.asarray(values, dtype=float).ravel()
        n = values.shape[0]
        if n == 0:
            return self
        if np.isnan(values).any():
            raise InvalidInputError("NaN value")
        if weights is None:
            weights = np.ones(n)
        else:
            weights = np.asarray(weights, dtype=float).ravel()
            if not (np.all(weights > 0) and np.all(np.isfinite(weights))):
                raise InvalidInputError("weights must be positive and finite")
        if times is None:
            times = np.arange(self.time + 1, self.time + n + 1)
        else:
            times = np.asarray(times, dtype=np.int64).ravel()
            if times[0] < self.time or np.any(np.diff(times) < 0):
                raise InvalidInputError("times must be non-decreasing")
        pos = 0
        while pos < n:
            room = min(
                self.block_size - len(self._bv),
                self._substream_end - self.points_seen,
            )
            stop = min(n, pos + max(room, 1))
            self._bv.extend(values[pos:stop].tolist())
            self._bw.extend(weights[pos:stop].tolist())
            self._bt.extend(times[pos:stop].tolist())
            self.time = int(times[stop - 1])
            self.points_seen += stop - pos
            pos = stop
            self._after_push()
        return self

    def inject_zeros(self, zero_weight: float, time: Optional[int] = None):
        """Push one point ``(0, zero_weight)`` standing for skipped zeros.

        The sketch clock is not advanced by default: the lump stands for
        arrivals that already happened.
        """
        if zero_weight < 0:
            raise InvalidInputError(f"negative zero weight {zero_weight}")
        if zero_weight == 0:
            return self
        return self.insert(0.0, zero_weight, self.time if time is None else time)

    def _after_push(self) -> None:
        if self.points_seen >= self._substream_end:
            self._close_substream()
        elif len(self._bv) >= self.block_size:
            self._flush()

    def _buffer_weights(self) -> np.ndarray:
        w = np.asarray(self._bw, dtype=float)
        if self.alpha is not None and w.size:
            age = self.time - np.asarray(self._bt)
            w = w * np.power(self.alpha, age)
        return w

    def _buffer_summary(self) -> SubSummary:
        if not self._bv:
            return SubSummary.empty()
        return SubSummary.from_points(np.asarray(self._bv), self._buffer_weights())

    def _clear_buffer(self) -> None:
        self._bv = []
        self._bw = []
        self._bt = []

    def decay_flush(self) -> None:
        """Multiply every retained summary by ``alpha**k`` and reset ``k``."""
        if self.alpha is None:
            self._penalized_at = self.time
            return
        k = self.time - self._penalized_at
        if k:
            f = self.alpha**k
            self.levels = [None if s is None else s.scaled(f) for s in self.levels]
            self.closed = [s.scaled(f) for s in self.closed]
        self._penalized_at = self.time

    def _flush(self) -> None:
        s0 = self._buffer_summary()
        self._clear_buffer()
        self.decay_flush()
        half = max(2, self.block_size // 2)
        temp = prune(s0, half)
        for lvl in range(len(self.levels)):
            if self.levels[lvl] is None:
                self.levels[lvl] = temp
                temp = None
                break
            temp = merge(temp, self.levels[lvl])
            temp = prune(temp, half)
            if len(temp) < self.block_size:
                self.levels[lvl] = temp
                temp = None
                break
            self.levels[lvl] = None
        if temp is not None:
            self.levels[-1] = temp

    def _close_substream(self) -> None:
        s0 = self._buffer_summary()
        self._clear_buffer()
        self.decay_flush()
        out = merge(s0, *(s for s in self.levels if s is not None))
        out = prune(out, max(2, _ceil(2.0 / self.epsilon)))
        if len(out):
            self.closed.append(out)
        self._open_substream(self.substream + 1)

    def finalize(self, time: Optional[int] = None) -> SubSummary:
        """Summary of everything seen so far; the sketch stays usable."""
        if time is not None:
            self.advance_to(time)
        self.decay_flush()
        parts = [s for s in self.levels if s is not None]
        parts.extend(self.closed)
        # Retained summaries are tight, so merging them with the raw buffer
        # is an exact summary of the pooled (value, weight) pairs.
        out = SubSummary.from_points(
            np.concatenate([np.asarray(self._bv, dtype=float)] + [s.values for s in parts]),
            np.concatenate([self._buffer_weights()] + [s.weights for s in parts]),
        )
        out.precision = max([0.0] + [s.precision for s in parts])
        return out

    def copy(self) -> "StreamSketch":
        new = StreamSketch.__new__(StreamSketch)
        new.__dict__.update(self.__dict__)
        new._bv = list(self._bv)
        new._bw = list(self._bw)
        new._bt = list(self._bt)
        new.levels = list(self.levels)
        new.closed = list(self.closed)
        return new

    def dump(self) -> str:
        """Tab-separated tuples: buffer, then levels, then closed summaries.

        Sections are separated by a blank line; empty levels print nothing.
        """
        sections = [self._buffer_summary()]
        sections.extend(SubSummary.empty() if s is None else s for s in self.levels)
        sections.extend(self.closed)
        return "\n".join(s.to_text() for s in sections)

"""Synthetic concept-drift streams and detection-rate benchmarking.

Sample ``i`` (0-based) is generated as::

    x_i = nu * z_i * 1 + noise_i          z_i, noise_ij ~ N(0, 1)
    y_i = beta_i . x_i + c + e_i          e_i ~ N(0, 1)
    beta_ij = b  if  i // l <= j < i // l + k  else 0

and labelled ``1`` when ``y_i > c``.  The block of ``k`` true features
slides one index to the right every ``l`` samples.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .engine import METHODS, Screener, ScreenerConfig, canonical_method, method_family, rank
from .exceptions import InvalidInputError


@dataclass(frozen=True)
class DriftStreamSpec:
    p: int = 200
    k_true: int = 20
    signal: float = 1.0
    shift_interval: int = 2000
    nu: float = 0.5
    n_samples: int = 20_000
    intercept: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k_true <= self.p:
            raise InvalidInputError("need 1 <= k_true <= p")
        if self.shift_interval < 1:
            raise InvalidInputError("shift_interval must be >= 1")
        if self.nu < 0:
            raise InvalidInputError("nu must be non-negative")
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be positive")
        last_start = (self.n_samples - 1) // self.shift_interval
        if last_start + self.k_true > self.p:
            raise InvalidInputError(
                f"the true-feature window reaches index {last_start + self.k_true - 1} "
                f"but only {self.p} features exist; need "
                f"(n_samples - 1) // shift_interval + k_true <= p"
            )

    def window_start(self, i):
        return np.asarray(i) // self.shift_interval

    def true_features(self, i: int) -> np.ndarray:
        start = int(i) // self.shift_interval
        return np.arange(start, start + self.k_true)


def generate(spec: DriftStreamSpec):
    """Return ``(X, labels, y)`` for the whole stream."""
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n_samples, spec.p
    z = rng.standard_normal(n)
    X = spec.nu * z[:, None] + rng.standard_normal((n, p))
    e = rng.standard_normal(n)
    start = spec.window_start(np.arange(n))
    csum = np.concatenate([np.zeros((n, 1)), np.cumsum(X, axis=1)], axis=1)
    rows = np.arange(n)
    signal = spec.signal * (csum[rows, start + spec.k_true] - csum[rows, start])
    y = signal + spec.intercept + e
    labels = (y > spec.intercept).astype(int)
    return X, labels, y


def detection_rate(selected, true_set) -> float:
    true_set = set(int(t) for t in true_set)
    if not true_set:
        raise InvalidInputError("the true feature set is empty")
    hits = len(true_set.intersection(int(s) for s in selected))
    return hits / len(true_set)


@dataclass
class DetectionRow:
    method: str
    shift_interval: int
    alpha: Optional[float]
    seed: int
    sample_index: int
    selected_k: int
    detection_rate: float


@dataclass
class DetectionReport:
    rows: List[DetectionRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "l", "alpha", "seed", "sample_index", "selected_k", "detection_rate"])
        for r in self.rows:
            w.writerow(
                [
                    r.method,
                    r.shift_interval,
                    "none" if r.alpha is None else repr(r.alpha),
                    r.seed,
                    r.sample_index,
                    r.selected_k,
                    repr(r.detection_rate),
                ]
            )
        return buf.getvalue()

    def select(self, method=None, shift_interval=None, alpha="any", selected_k=None):
        out = []
        for r in self.rows:
            if method is not None and r.method != method:
                continue
            if shift_interval is not None and r.shift_interval != shift_interval:
                continue
            if alpha != "any" and r.alpha != alpha:
                continue
            if selected_k is not None and r.selected_k != selected_k:
                continue
            out.append(r)
        return out

    def mean_rate(self, start_index=0, **filters) -> float:
        rows = [r for r in self.select(**filters) if r.sample_index >= start_index]
        if not rows:
            raise InvalidInputError("no rows match")
        return float(np.mean([r.detection_rate for r in rows]))


def run_stream(
    spec: DriftStreamSpec,
    methods: Sequence[str],
    alpha: Optional[float],
    checkpoints: Iterable[int],
    selected_ks: Sequence[int],
    epsilon: float = 0.001,
    k_bins: int = 5,
    minibatch: int = 250,
    fading_period: int = 1,
) -> List[DetectionRow]:
    """Stream one generated data set through one screener per method family
    and record DetRate@k at each checkpoint (number of samples seen)."""
    methods = [canonical_method(m) for m in methods]
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if not checkpoints or checkpoints[0] < 1:
        raise InvalidInputError("checkpoints must be >= 1 sample")
    if checkpoints[-1] > spec.n_samples:
        raise InvalidInputError("checkpoint beyond the end of the stream")
    for k in selected_ks:
        if not 1 <= k <= spec.p:
            raise InvalidInputError(f"selected k={k} outside [1, {spec.p}]")
    X, labels, _ = generate(spec)
    engines = {}
    for fam in ("meanvar", "bincount"):
        fam_methods = [m for m in methods if method_family(m) == fam]
        if fam_methods:
            cfg = ScreenerConfig(
                method=fam_methods[0],
                epsilon=epsilon,
                k_bins=k_bins,
                alpha=alpha,
                fading_period=fading_period,
                minibatch=minibatch,
                feature_count=spec.p,
            )
            engines[fam] = (Screener(cfg), fam_methods)
    rows = []
    pos = 0
    for cp in checkpoints:
        while pos < cp:
            stop = min(cp, pos + minibatch)
            batch = list(zip(X[pos:stop], labels[pos:stop].tolist()))
            for eng, _ in engines.values():
                eng.observe_batch(batch)
            pos = stop
        truth = spec.true_features(cp - 1)
        for eng, fam_methods in engines.values():
            if eng.n_classes < 2:
                continue
            for m in fam_methods:
                order = rank(eng.scores(m)).order
                for k in selected_ks:
                    rows.append(
                        DetectionRow(m, spec.shift_interval, alpha, spec.seed, cp, k,
                                     detection_rate(order[:k], truth))
                    )
    return rows


def run_grid(
    base: DriftStreamSpec,
    shift_intervals: Sequence[int],
    alphas: Sequence[Optional[float]],
    methods: Sequence[str] = METHODS,
    seeds: Sequence[int] = (0,),
    checkpoint_every: int = 500,
    selected_ks: Sequence[int] = (100,),
    **engine_kwargs,
) -> DetectionReport:
    """Every (shift interval, alpha, seed) cell; ``None`` in ``alphas`` is the
    run without adaptation."""
    report = DetectionReport()
    for l in shift_intervals:
        for seed in seeds:
            spec = DriftStreamSpec(**{**base.__dict__, "shift_interval": l, "seed": seed})
            checkpoints = range(checkpoint_every, spec.n_samples + 1, checkpoint_every)
            for a in alphas:
                report.rows.extend(
                    run_stream(spec, methods, a, checkpoints, selected_ks, **engine_kwargs)
                )
    return report

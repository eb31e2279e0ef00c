"""Command-line front end: ``screen``, ``compare`` and ``bench``.

Every option can also come from an environment variable named
``STREAMSCREEN_<OPTION>`` (for example ``STREAMSCREEN_EPSILON``).  A flag on
the command line wins over the environment, which wins over the defaults.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .engine import BINCOUNT_METHODS, METHODS, Screener, ScreenerConfig, canonical_method, rank
from .exceptions import InvalidInputError, StreamScreenError
from .oracle import (
    DenseDataset,
    count_difference,
    misrank_ratio,
    offline_score,
    offline_tables,
    score_diff_ratio,
)
from .records import FORMATS, SampleRecord, iter_records
from .synth import DriftStreamSpec, run_grid

ENV_PREFIX = "STREAMSCREEN_"

DEFAULTS = {
    "method": "mutual_info",
    "epsilon": "0.001",
    "bins": "5",
    "minibatch": "250",
    "alpha": "none",
    "fading_period": "1",
    "sparse": "false",
    "format": "svmlight",
    "top_k": "0",
    "seed": "0",
    "out_dir": ".",
}

DEFAULT_EPSILONS = "0.2,0.02,0.01,0.002,0.001,0.000666666666666667,0.0005"
DEFAULT_MINIBATCHES = ",".join(str(2**i) for i in range(12))


# ----------------------------------------------------------------- settings


def _setting(args, name: str, default: Optional[str] = None) -> str:
    value = getattr(args, name, None)
    if value is not None:
        return value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None and env != "":
        return env
    return DEFAULTS[name] if default is None else default


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("none", "off", "") else float(text)


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise InvalidInputError(f"not a boolean: {text!r}")


def _float_list(text: str) -> List[Optional[float]]:
    return [_optional_float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _screener_config(args, feature_count=None, sparse=None) -> ScreenerConfig:
    return ScreenerConfig(
        method=_setting(args, "method"),
        epsilon=float(_setting(args, "epsilon")),
        k_bins=int(_setting(args, "bins")),
        alpha=_optional_float(_setting(args, "alpha")),
        fading_period=int(_setting(args, "fading_period")),
        minibatch=int(_setting(args, "minibatch")),
        sparse=_flag(_setting(args, "sparse")) if sparse is None else sparse,
        feature_count=feature_count,
    )


# ------------------------------------------------------------------ writers


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(path: Path, items: Sequence) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items:
            fh.write(f"{key}: {value}\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def _config_items(cfg: ScreenerConfig):
    return [
        ("method", cfg.method),
        ("epsilon", _fmt(cfg.epsilon)),
        ("bins", cfg.k_bins),
        ("minibatch", cfg.minibatch),
        ("alpha", "none" if cfg.alpha is None else _fmt(cfg.alpha)),
        ("fading_period", cfg.fading_period),
        ("sparse", str(cfg.sparse).lower()),
    ]


# ------------------------------------------------------------------- screen


def _to_sample(rec: SampleRecord, sparse: bool):
    if rec.is_sparse:
        idx = np.fromiter((i - 1 for i, _ in rec.entries), dtype=np.intp, count=len(rec.entries))
        vals = np.fromiter((v for _, v in rec.entries), dtype=float, count=len(rec.entries))
        return (idx, vals), rec.label
    x = np.asarray(rec.entries, dtype=float)
    if sparse:
        nz = np.flatnonzero(x)
        return (nz.astype(np.intp), x[nz]), rec.label
    return x, rec.label


def screen_stream(lines: Iterable[str], cfg: ScreenerConfig, fmt: str = "svmlight") -> Screener:
    """Feed a line stream through one screener in minibatches (single pass)."""
    engine = Screener(cfg)
    sparse = cfg.sparse
    batch = []
    for rec in iter_records(lines, fmt):
        batch.append(_to_sample(rec, sparse))
        if len(batch) == cfg.minibatch:
            engine.observe_batch(batch)
            batch = []
    if batch:
        engine.observe_batch(batch)
    if engine.t == 0:
        raise InvalidInputError("the input holds no samples")
    return engine


def cmd_screen(args) -> int:
    fmt = _setting(args, "format")
    if fmt not in FORMATS:
        raise InvalidInputError(f"unknown format {fmt!r}")
    # svmlight rows only list their non-zero entries, so they are always
    # ingested through the sparse path.
    sparse = True if fmt == "svmlight" else None
    cfg = _screener_config(args, feature_count=args.features, sparse=sparse)
    top_k = int(_setting(args, "top_k"))
    out_dir = Path(_setting(args, "out_dir"))

    start = time.perf_counter()
    if args.input == "-":
        engine = screen_stream(sys.stdin, cfg, fmt)
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            engine = screen_stream(fh, cfg, fmt)
    result = engine.scores()
    ranking = rank(result)
    elapsed = time.perf_counter() - start

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "scores.csv",
        ["feature_index", "score", "rank"],
        ((j + 1, _fmt(s), int(r)) for j, (s, r) in enumerate(zip(result.scores, ranking.rank_of))),
    )
    if top_k:
        chosen = ranking.order[: min(top_k, len(result))]
        _write_csv(
            out_dir / "selected.csv",
            ["rank", "feature_index", "score"],
            ((n + 1, int(j) + 1, _fmt(result.scores[j])) for n, j in enumerate(chosen)),
        )
    items = [("command", "screen"), ("input", args.input), ("format", fmt)]
    items += _config_items(cfg)
    items += [
        ("samples", engine.t),
        ("features", engine.n_features),
        ("classes", " ".join(str(t) for t in engine.label_tokens)),
        ("top_k", top_k),
    ]
    _write_manifest(out_dir / "manifest.txt", items)
    _write_manifest(out_dir / "timing.txt", [("wall_seconds", f"{elapsed:.6f}")])
    return 0


# ------------------------------------------------------------------ compare


def load_dense(lines: Iterable[str], fmt: str, feature_count: Optional[int] = None) -> DenseDataset:
    """Read a whole file into a dense matrix (zero-filling sparse rows)."""
    records = list(iter_records(lines, fmt))
    if not records:
        raise InvalidInputError("the input holds no samples")
    if fmt == "svmlight":
        p = max((r.entries[-1][0] for r in records if r.entries), default=0)
        p = max(p, feature_count or 0)
        X = np.zeros((len(records), p))
        for i, r in enumerate(records):
            for j, v in r.entries:
                X[i, j - 1] = v
    else:
        X = np.array([r.entries for r in records], dtype=float)
    return DenseDataset(X, np.array([r.label for r in records]))


def _stream_dense(data: DenseDataset, cfg: ScreenerConfig) -> Screener:
    engine = Screener(cfg)
    n = data.X.shape[0]
    for lo in range(0, n, cfg.minibatch):
        hi = min(n, lo + cfg.minibatch)
        engine.observe_batch(list(zip(data.X[lo:hi], data.y[lo:hi].tolist())))
    return engine


def cmd_compare(args) -> int:
    fmt = _setting(args, "format")
    base = _screener_config(args, sparse=False)
    out_dir = Path(_setting(args, "out_dir"))
    epsilons = [e for e in _float_list(args.epsilons) if e is not None]
    minibatches = _int_list(args.minibatches)
    if args.input == "-":
        data = load_dense(sys.stdin, fmt)
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            data = load_dense(fh, fmt)
    if len(data.classes()) < 2:
        raise InvalidInputError("comparison needs at least two classes")
    k = base.k_bins
    bin_methods = [m for m in BINCOUNT_METHODS]
    offline = {m: offline_score(data, m, k) for m in bin_methods}
    offline_rank = {m: rank(offline[m]) for m in bin_methods}
    off_tables = offline_tables(data, k)

    def configured(**changes):
        fields = dict(base.__dict__)
        fields.update(changes)
        return ScreenerConfig(**fields)

    bin_base = base.method if base.family == "bincount" else "mutual_info"
    runtime_mb = []
    for mb in minibatches:
        start = time.perf_counter()
        eng = _stream_dense(data, configured(method=bin_base, minibatch=mb))
        eng.scores()
        runtime_mb.append((mb, f"{time.perf_counter() - start:.6f}"))

    runtime_eps, counts, ratios, misranks = [], [], [], []
    for eps in epsilons:
        start = time.perf_counter()
        eng = _stream_dense(data, configured(method=bin_base, epsilon=eps))
        tables = eng.bin_tables()
        runtime_eps.append((_fmt(eps), f"{time.perf_counter() - start:.6f}"))
        counts.append((_fmt(eps), _fmt(count_difference(tables, off_tables))))
        for m in bin_methods:
            online = eng.scores(m)
            ratios.append((_fmt(eps), m, _fmt(score_diff_ratio(online, offline[m]))))
            misranks.append(
                (_fmt(eps), m, _fmt(misrank_ratio(rank(online), offline_rank[m], args.top_fraction)))
            )

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "runtime_vs_minibatch.csv", ["minibatch", "seconds"], runtime_mb)
    _write_csv(out_dir / "runtime_vs_epsilon.csv", ["epsilon", "seconds"], runtime_eps)
    _write_csv(out_dir / "count_difference.csv", ["epsilon", "count_difference"], counts)
    _write_csv(out_dir / "score_diff_ratio.csv", ["epsilon", "method", "score_diff_ratio"], ratios)
    _write_csv(out_dir / "misrank_ratio.csv", ["epsilon", "method", "misrank_ratio"], misranks)
    items = [("command", "compare"), ("input", args.input), ("format", fmt)]
    items += _config_items(base)
    items += [
        ("samples", data.X.shape[0]),
        ("features", data.X.shape[1]),
        ("epsilons", ",".join(_fmt(e) for e in epsilons)),
        ("minibatches", ",".join(str(m) for m in minibatches)),
        ("top_fraction", _fmt(args.top_fraction)),
    ]
    _write_manifest(out_dir / "manifest.txt", items)
    return 0


# -------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    out_dir = Path(_setting(args, "out_dir"))
    alphas = _float_list(_setting(args, "alpha", "0.9"))
    # The run without adaptation is always included as the paired baseline.
    if None not in alphas:
        alphas = [None] + alphas
    seeds = _int_list(_setting(args, "seed"))
    methods = [canonical_method(m) for m in args.methods.split(",") if m.strip()]
    shifts = _int_list(args.shift)
    selected = _int_list(args.selected_k)
    base = DriftStreamSpec(
        p=args.p,
        k_true=args.k_true,
        signal=args.signal,
        shift_interval=max(shifts),
        nu=args.nu,
        n_samples=args.n_samples,
        intercept=args.intercept,
        seed=seeds[0],
    )
    for l in shifts:
        DriftStreamSpec(**{**base.__dict__, "shift_interval": l})
    start = time.perf_counter()
    report = run_grid(
        base,
        shifts,
        alphas,
        methods=methods,
        seeds=seeds,
        checkpoint_every=args.checkpoint_every,
        selected_ks=selected,
        epsilon=float(_setting(args, "epsilon")),
        k_bins=int(_setting(args, "bins")),
        minibatch=int(_setting(args, "minibatch")),
        fading_period=int(_setting(args, "fading_period", "250")),
    )
    elapsed = time.perf_counter() - start

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "detection.csv").write_text(report.to_csv(), encoding="utf-8")
    half = base.n_samples // 2
    rows = []
    for m in methods:
        for l in shifts:
            for k in selected:
                static = report.mean_rate(half, method=m, shift_interval=l, alpha=None, selected_k=k)
                for a in alphas:
                    if a is None:
                        continue
                    adaptive = report.mean_rate(half, method=m, shift_interval=l, alpha=a, selected_k=k)
                    rows.append((m, l, _fmt(a), k, _fmt(static), _fmt(adaptive), _fmt(adaptive - static)))
    _write_csv(
        out_dir / "summary.csv",
        ["method", "l", "alpha", "selected_k", "static_rate", "adaptive_rate", "gain"],
        rows,
    )
    items = [
        ("command", "bench"),
        ("methods", ",".join(methods)),
        ("p", base.p),
        ("k_true", base.k_true),
        ("signal", _fmt(base.signal)),
        ("shift_intervals", ",".join(str(l) for l in shifts)),
        ("nu", _fmt(base.nu)),
        ("n_samples", base.n_samples),
        ("intercept", _fmt(base.intercept)),
        ("seeds", ",".join(str(s) for s in seeds)),
        ("alphas", ",".join("none" if a is None else _fmt(a) for a in alphas)),
        ("fading_period", int(_setting(args, "fading_period", "250"))),
        ("epsilon", _fmt(float(_setting(args, "epsilon")))),
        ("bins", int(_setting(args, "bins"))),
        ("minibatch", int(_setting(args, "minibatch"))),
        ("checkpoint_every", args.checkpoint_every),
        ("selected_k", ",".join(str(k) for k in selected)),
        ("rows", len(report.rows)),
    ]
    _write_manifest(out_dir / "manifest.txt", items)
    _write_manifest(out_dir / "timing.txt", [("wall_seconds", f"{elapsed:.6f}")])
    return 0


# ------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    # Defaults stay None so the environment can fill the gap.
    p.add_argument("--method", help="t_score, fisher, gini, chi_square or mutual_info (mi)")
    p.add_argument("--epsilon", help="sketch precision (default 0.001)")
    p.add_argument("--bins", help="number of equal-frequency bins (default 5)")
    p.add_argument("--minibatch", help="samples per ingestion batch (default 250)")
    p.add_argument("--alpha", help="fading factor, or 'none' for no adaptation")
    p.add_argument("--fading-period", dest="fading_period",
                   help="arrivals over which alpha is applied once")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamscreen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("screen", help="score every feature of a labelled stream")
    _common(p)
    p.add_argument("--sparse", nargs="?", const="true",
                   help="ingest through the sparse path (implied for svmlight)")
    p.add_argument("--format", choices=FORMATS, help="svmlight (default) or csv")
    p.add_argument("--top-k", dest="top_k", help="also write the k best features")
    p.add_argument("--features", type=int, default=None,
                   help="declared feature count (default: taken from the data)")
    p.add_argument("input", help="input file, or - for stdin")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("compare", help="online against offline scores over an epsilon grid")
    _common(p)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--epsilons", default=DEFAULT_EPSILONS)
    p.add_argument("--minibatches", default=DEFAULT_MINIBATCHES)
    p.add_argument("--top-fraction", dest="top_fraction", type=float, default=0.1)
    p.add_argument("input")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="detection rates on synthetic drifting streams")
    _common(p)
    p.add_argument("--seed", help="comma-separated seeds (default 0)")
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--shift", default="2000", help="comma-separated shift intervals l")
    p.add_argument("--p", type=int, default=200)
    p.add_argument("--k-true", dest="k_true", type=int, default=20)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=20_000)
    p.add_argument("--intercept", type=float, default=0.0)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=500)
    p.add_argument("--selected-k", dest="selected_k", default="100")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StreamScreenError, ValueError, OSError) as exc:
        print(f"streamscreen {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

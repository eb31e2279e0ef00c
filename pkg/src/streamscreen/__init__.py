"""Online feature screening over data streams.

Mean-variance criteria (T-score, Fisher) come from running per-class
moments; bin-count criteria (Gini, chi-square, mutual information) come from
equal-frequency bins read off weighted quantile sketches.  Both families
support a fading factor for drifting streams.
"""

__version__ = "0.1.0"

from .criteria import chi_square, gini_index, mutual_information
from .discretize import BinCounts, BinTable, aggregate_bins, build_table
from .engine import (
    METHODS,
    Ranking,
    ScoreVector,
    Screener,
    ScreenerConfig,
    canonical_method,
    rank,
    select_top_k,
)
from .exceptions import (
    ConfigurationError,
    DegenerateScoreError,
    InvalidInputError,
    ParseError,
    StreamScreenError,
)
from .moments import ClassStats, fisher_score, t_score
from .records import SampleRecord, iter_records, parse_sample
from .sketch import StreamSketch, SubSummary, SummaryTuple, merge, pool, prune, query

__all__ = [
    "BinCounts",
    "BinTable",
    "ClassStats",
    "ConfigurationError",
    "DegenerateScoreError",
    "InvalidInputError",
    "METHODS",
    "ParseError",
    "Ranking",
    "SampleRecord",
    "ScoreVector",
    "Screener",
    "ScreenerConfig",
    "StreamScreenError",
    "StreamSketch",
    "SubSummary",
    "SummaryTuple",
    "aggregate_bins",
    "build_table",
    "canonical_method",
    "chi_square",
    "fisher_score",
    "gini_index",
    "iter_records",
    "merge",
    "mutual_information",
    "parse_sample",
    "pool",
    "prune",
    "query",
    "rank",
    "select_top_k",
    "t_score",
]

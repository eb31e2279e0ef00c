"""Line parsers for svmlight/libsvm and headerless CSV streams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Tuple, Union

from .exceptions import ParseError

FORMATS = ("svmlight", "csv")


@dataclass
class SampleRecord:
    label: str
    # Dense list of values, or 1-based (index, value) pairs for svmlight.
    entries: Union[List[float], List[Tuple[int, float]]]

    @property
    def is_sparse(self) -> bool:
        return bool(self.entries) and isinstance(self.entries[0], tuple)


def _number(token: str, line_number) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", line_number) from None
    if math.isnan(value):
        raise ParseError("NaN value", line_number)
    return value


def parse_svmlight(line: str, line_number=None) -> SampleRecord:
    body = line.split("#", 1)[0].split()
    if not body:
        raise ParseError("empty record", line_number)
    label, pairs = body[0], []
    prev = 0
    for token in body[1:]:
        if token.startswith("qid:"):
            continue
        idx, sep, val = token.partition(":")
        if not sep or not idx or not val:
            raise ParseError(f"malformed pair {token!r}", line_number)
        try:
            index = int(idx)
        except ValueError:
            raise ParseError(f"non-integer index {idx!r}", line_number) from None
        if index < 1:
            raise ParseError(f"index {index} is not 1-based", line_number)
        if index <= prev:
            raise ParseError(f"index {index} does not increase (previous {prev})", line_number)
        prev = index
        pairs.append((index, _number(val, line_number)))
    return SampleRecord(label, pairs)


def parse_csv(line: str, line_number=None, label_column: int = 0) -> SampleRecord:
    fields = [f.strip() for f in line.rstrip("\r\n").split(",")]
    if not fields or fields == [""]:
        raise ParseError("empty record", line_number)
    try:
        label = fields.pop(label_column)
    except IndexError:
        raise ParseError(f"no label column {label_column}", line_number) from None
    return SampleRecord(label, [_number(f, line_number) for f in fields])


def parse_sample(line: str, fmt: str = "svmlight", line_number=None, label_column: int = 0):
    if fmt == "svmlight":
        return parse_svmlight(line, line_number)
    if fmt == "csv":
        return parse_csv(line, line_number, label_column)
    raise ValueError(f"unknown format {fmt!r}")


def iter_records(lines: Iterable[str], fmt: str = "svmlight", label_column: int = 0) -> Iterator[SampleRecord]:
    """Parse a stream lazily; blank and comment-only lines are skipped."""
    arity = None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rec = parse_sample(line, fmt, number, label_column)
        if fmt == "csv":
            if arity is None:
                arity = len(rec.entries)
            elif len(rec.entries) != arity:
                raise ParseError(f"expected {arity} values, got {len(rec.entries)}", number)
        yield rec

import pytest

from streamscreen.exceptions import ParseError
from streamscreen.records import iter_records, parse_sample


def test_svmlight_line():
    rec = parse_sample("1 3:0.5 7:1.2")
    assert rec.label == "1"
    assert rec.entries == [(3, 0.5), (7, 1.2)]
    assert rec.is_sparse


def test_csv_line():
    rec = parse_sample("0,1.5,2.5", "csv")
    assert rec.label == "0"
    assert rec.entries == [1.5, 2.5]
    assert not rec.is_sparse


def test_csv_other_label_column():
    assert parse_sample("1.5,2.5,yes", "csv", label_column=-1).label == "yes"


def test_non_increasing_index():
    with pytest.raises(ParseError, match="line 4"):
        parse_sample("1 7:1.2 3:0.5", line_number=4)
    with pytest.raises(ParseError):
        parse_sample("1 3:1 3:2")


def test_malformed_input():
    for line in ("1 3-0.5", "1 a:1", "1 0:2", "1 2:x", "1 :3", "1 2:nan"):
        with pytest.raises(ParseError):
            parse_sample(line)
    with pytest.raises(ParseError):
        parse_sample("0,1,abc", "csv")


def test_trailing_comment_and_qid():
    rec = parse_sample("-1 qid:3 2:1 # note 5:9")
    assert rec.label == "-1"
    assert rec.entries == [(2, 1.0)]


def test_label_only_line():
    assert parse_sample("+1").entries == []


def test_iter_records_skips_blank_and_comment_lines():
    lines = ["# header\n", "1 1:2\n", "\n", "0 2:3\n"]
    assert [r.label for r in iter_records(lines)] == ["1", "0"]


def test_iter_records_reports_line_numbers():
    with pytest.raises(ParseError, match="line 3"):
        list(iter_records(["1 1:1", "", "1 x"]))


def test_csv_arity_is_constant():
    with pytest.raises(ParseError, match="line 2"):
        list(iter_records(["0,1,2", "1,1"], "csv"))


def test_unknown_format():
    with pytest.raises(ValueError):
        parse_sample("1", "arff")

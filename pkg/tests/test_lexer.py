from __future__ import annotations

import pytest

from tvrsql.errors import SqlError
from tvrsql.lexer import Tok, tokenize
from tvrsql.times import Duration


def kinds(text):
    return [t.kind for t in tokenize(text)][:-1]  # drop EOF


def texts(text):
    return [t.text for t in tokenize(text)][:-1]


def test_keywords_and_punct():
    assert texts("EMIT STREAM;") == ["EMIT", "STREAM", ";"]
    assert kinds("EMIT STREAM;") == [Tok.WORD, Tok.WORD, Tok.PUNCT]


def test_interval_literal_folds_to_one_token():
    toks = tokenize("INTERVAL '10' MINUTE")
    assert [t.kind for t in toks] == [Tok.INTERVAL, Tok.EOF]
    assert toks[0].value == Duration(10)
    assert tokenize("interval '6' minutes")[0].value == Duration(6)


def test_descriptor_arrow_sequence():
    toks = tokenize("timecol => DESCRIPTOR(bidtime)")
    assert [t.text for t in toks[:-1]] == ["timecol", "=>", "DESCRIPTOR", "(", "bidtime", ")"]
    assert toks[1].kind is Tok.PUNCT


def test_comparison_operators_greedy():
    assert texts("a <= b >= c < d") == ["a", "<=", "b", ">=", "c", "<", "d"]


def test_positions_are_tracked():
    toks = tokenize("SELECT\n  x FROM t;")
    x = toks[1]
    assert (x.line, x.col) == (2, 3)


def test_unterminated_string():
    with pytest.raises(SqlError) as exc:
        tokenize("FORMAT 'oops")
    assert "unterminated" in str(exc.value)
    assert exc.value.line == 1


def test_unknown_character():
    with pytest.raises(SqlError) as exc:
        tokenize("SELECT @ FROM t")
    assert exc.value.col == 8


def test_interval_requires_quoted_minutes():
    with pytest.raises(SqlError):
        tokenize("INTERVAL 10 MINUTE")
    with pytest.raises(SqlError):
        tokenize("INTERVAL '10' HOUR")
    with pytest.raises(SqlError):
        tokenize("INTERVAL 'x' MINUTE")

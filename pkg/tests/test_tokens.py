"""Tokenizer unit tests."""

import pytest
from hypothesis import given, strategies as st

from semaquery.errors import LexError
from semaquery.sql.tokens import KEYWORDS, Token, tokenize


def kinds(sql):
    return [t.kind for t in tokenize(sql)]


def texts(sql):
    return [t.text for t in tokenize(sql) if t.kind != "EOF"]


def test_empty_input_yields_eof_only():
    toks = tokenize("")
    assert len(toks) == 1
    assert toks[0].kind == "EOF"


def test_keywords_case_insensitive_and_uppercased():
    for raw in ("select", "Select", "SELECT", "sElEcT"):
        tok = tokenize(raw)[0]
        assert tok.kind == "KEYWORD"
        assert tok.text == "SELECT"


def test_identifier_case_preserved():
    tok = tokenize("MyTable")[0]
    assert tok.kind == "IDENT"
    assert tok.text == "MyTable"


def test_matches_helper():
    tok = tokenize("from")[0]
    assert tok.matches("FROM")
    assert not tok.matches("SELECT")
    assert not Token("IDENT", "FROM", 1, 1).matches("FROM")


def test_string_literal_value():
    tok = tokenize("'hello world'")[0]
    assert tok.kind == "STRING"
    assert tok.value == "hello world"


def test_string_quote_escape_doubles():
    tok = tokenize("'it''s fine'")[0]
    assert tok.value == "it's fine"


def test_string_preserves_prompt_braces():
    tok = tokenize("'find {state VARCHAR} from {{addr}}'")[0]
    assert tok.value == "find {state VARCHAR} from {{addr}}"


def test_unterminated_string_raises():
    with pytest.raises(LexError, match="unterminated string"):
        tokenize("SELECT 'oops")


def test_quoted_identifier():
    tok = tokenize('"Weird Name"')[0]
    assert tok.kind == "QIDENT"
    assert tok.text == "Weird Name"


def test_unterminated_quoted_identifier_raises():
    with pytest.raises(LexError, match="unterminated quoted identifier"):
        tokenize('"no end')


def test_integer_and_float_values():
    toks = tokenize("42 3.14 0.5")
    assert toks[0].kind == "INT" and toks[0].value == 42
    assert toks[1].kind == "FLOAT" and toks[1].value == 3.14
    assert toks[2].kind == "FLOAT" and toks[2].value == 0.5


def test_integer_dot_without_digits_is_member_access():
    # "1." followed by an identifier must stay INT OP IDENT
    toks = tokenize("1.x")
    assert [t.kind for t in toks[:3]] == ["INT", "OP", "IDENT"]


def test_line_comment_skipped():
    toks = tokenize("SELECT -- the rest is gone\n1")
    assert [t.text for t in toks[:2]] == ["SELECT", "1"]


def test_block_comment_skipped():
    toks = tokenize("SELECT /* multi\nline */ 1")
    assert [t.text for t in toks[:2]] == ["SELECT", "1"]


def test_unterminated_block_comment_raises():
    with pytest.raises(LexError, match="unterminated block comment"):
        tokenize("SELECT /* never closed")


def test_two_char_operators_not_split():
    assert texts("<= >= <> !=") == ["<=", ">=", "<>", "<>"]


def test_bang_equals_normalized_to_diamond():
    tok = tokenize("!=")[0]
    assert tok.kind == "OP"
    assert tok.text == "<>"


def test_symbols_roundtrip():
    assert texts("( ) , ; . { } : = < > + - * /") == [
        "(", ")", ",", ";", ".", "{", "}", ":",
        "=", "<", ">", "+", "-", "*", "/",
    ]


def test_unexpected_character_raises():
    with pytest.raises(LexError, match="unexpected character"):
        tokenize("SELECT @")


def test_line_and_column_tracking():
    toks = tokenize("SELECT\n  name")
    assert (toks[0].line, toks[0].column) == (1, 1)
    assert (toks[1].line, toks[1].column) == (2, 3)


def test_column_counts_inside_strings():
    toks = tokenize("'ab'  x")
    assert (toks[1].line, toks[1].column) == (1, 7)


def test_keyword_set_covers_dialect():
    for word in ("LLM", "PREDICT", "PROMPT", "TABULAR", "EMBED", "AGG",
                 "SECRET", "OPTIONS", "EXPLAIN", "OPTIMIZED", "ANALYZE"):
        assert word in KEYWORDS


def test_underscore_identifiers():
    tok = tokenize("main_character")[0]
    assert tok.kind == "IDENT"
    assert tok.text == "main_character"


ident_chars = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu"), max_codepoint=127),
    min_size=1, max_size=12,
)


@given(ident_chars)
def test_word_is_always_single_token(word):
    toks = tokenize(word)
    assert len(toks) == 2
    assert toks[0].kind in ("KEYWORD", "IDENT")


@given(st.text(alphabet=st.sampled_from(" \t\r\n"), max_size=20))
def test_whitespace_only_yields_eof(ws):
    assert kinds(ws) == ["EOF"]


@given(st.integers(min_value=0, max_value=10**9))
def test_integer_literal_roundtrip(n):
    tok = tokenize(str(n))[0]
    assert tok.kind == "INT"
    assert tok.value == n


@given(st.text(alphabet=st.characters(blacklist_characters="'", max_codepoint=127),
               max_size=40))
def test_string_literal_roundtrip(body):
    tok = tokenize("'" + body.replace("'", "''") + "'")[0]
    assert tok.kind == "STRING"
    assert tok.value == body

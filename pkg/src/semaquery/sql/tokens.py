"""SQL tokenizer for the extended dialect.

Single-quoted strings are opaque here: prompt braces pass through
verbatim for the prompt sub-parser. Keywords are case-insensitive;
identifiers are case-preserving; double quotes delimit quoted
identifiers.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "JOIN", "NATURAL", "CROSS", "INNER", "ON", "AS", "AND", "OR", "NOT",
    "NULL", "TRUE", "FALSE", "IS",
    "CREATE", "TABLE", "MODEL", "LLM", "TABULAR", "EMBED", "PREDICT",
    "PROMPT", "PATH", "API", "OPTIONS", "SECRET", "FEATURES", "OUTPUT",
    "AGG", "SET", "DROP", "ALTER", "ADD", "PRIMARY", "FOREIGN", "KEY",
    "REFERENCES", "EXPLAIN", "OPTIMIZED", "ANALYZE",
}

# token kinds: KEYWORD IDENT QIDENT STRING INT FLOAT OP EOF
_SYMBOLS = ("<=", ">=", "<>", "!=", "(", ")", ",", ";", ".", "{", "}", ":",
            "=", "<", ">", "+", "-", "*", "/")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: object = None

    def matches(self, keyword: str) -> bool:
        return self.kind == "KEYWORD" and self.text == keyword


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(sql)

    def advance(steps: int):
        nonlocal i, line, col
        for _ in range(steps):
            if sql[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = sql[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if sql.startswith("--", i):
            end = sql.find("\n", i)
            advance((end - i) if end >= 0 else (n - i))
            continue
        if sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated block comment", line, col)
            advance(end + 2 - i)
            continue
        if ch == "'":
            start_line, start_col = line, col
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise LexError("unterminated string literal", start_line, start_col)
                if sql[j] == "'":
                    if j + 1 < n and sql[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(sql[j])
                j += 1
            text = "".join(buf)
            tokens.append(Token("STRING", text, start_line, start_col, text))
            advance(j + 1 - i)
            continue
        if ch == '"':
            start_line, start_col = line, col
            j = sql.find('"', i + 1)
            if j < 0:
                raise LexError("unterminated quoted identifier", start_line, start_col)
            tokens.append(Token("QIDENT", sql[i + 1:j], start_line, start_col))
            advance(j + 1 - i)
            continue
        if ch.isdigit():
            start_line, start_col = line, col
            j = i
            while j < n and sql[j].isdigit():
                j += 1
            is_float = False
            if j < n and sql[j] == "." and j + 1 < n and sql[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and sql[j].isdigit():
                    j += 1
            text = sql[i:j]
            if is_float:
                tokens.append(Token("FLOAT", text, start_line, start_col, float(text)))
            else:
                tokens.append(Token("INT", text, start_line, start_col, int(text)))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (sql[j].isalnum() or sql[j] == "_"):
                j += 1
            text = sql[i:j]
            upper = text.upper()
            if upper in KEYWORDS:
                # keep the raw spelling so soft keywords can act as identifiers
                tokens.append(Token("KEYWORD", upper, start_line, start_col, text))
            else:
                tokens.append(Token("IDENT", text, start_line, start_col))
            advance(j - i)
            continue
        for sym in _SYMBOLS:
            if sql.startswith(sym, i):
                text = "<>" if sym == "!=" else sym
                tokens.append(Token("OP", text, line, col))
                advance(len(sym))
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, col)

    tokens.append(Token("EOF", "", line, col))
    return tokens

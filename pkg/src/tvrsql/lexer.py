"""SQL tokenizer. Keywords are case-insensitive words; `INTERVAL '<n>' MINUTE[S]`
folds into a single interval-literal token so the parser never sees raw strings.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import SqlError
from .times import Duration


class Tok(enum.Enum):
    WORD = "word"
    INT = "int"
    STRING = "string"
    INTERVAL = "interval"
    PUNCT = "punct"
    EOF = "eof"


PUNCT = ("=>", "<=", ">=", "(", ")", ",", ";", ".", "=", "<", ">", "+", "-", "*")


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    line: int
    col: int
    value: object = None

    def is_word(self, *words: str) -> bool:
        return self.kind is Tok.WORD and self.text.upper() in words

    def is_punct(self, p: str) -> bool:
        return self.kind is Tok.PUNCT and self.text == p


def tokenize(text: str) -> list[Token]:
    tokens = _scan(text)
    return _fold_intervals(tokens)


def _scan(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == "-" and text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token(Tok.WORD, text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token(Tok.INT, text[i:j], line, col, value=int(text[i:j])))
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i + 1
            while j < n and text[j] != "'":
                if text[j] == "\n":
                    break
                j += 1
            if j >= n or text[j] != "'":
                raise SqlError("unterminated string literal", line, col)
            tokens.append(Token(Tok.STRING, text[i : j + 1], line, col, value=text[i + 1 : j]))
            col += j + 1 - i
            i = j + 1
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token(Tok.PUNCT, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise SqlError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token(Tok.EOF, "", line, col))
    return tokens


def _fold_intervals(tokens: list[Token]) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.is_word("INTERVAL"):
            lit = tokens[i + 1] if i + 1 < len(tokens) else None
            unit = tokens[i + 2] if i + 2 < len(tokens) else None
            if lit is None or lit.kind is not Tok.STRING:
                raise SqlError("INTERVAL requires a quoted value", tok.line, tok.col)
            if unit is None or not unit.is_word("MINUTE", "MINUTES"):
                raise SqlError("INTERVAL unit must be MINUTE or MINUTES", tok.line, tok.col)
            try:
                n = int(str(lit.value))
            except ValueError:
                raise SqlError(f"bad INTERVAL value {lit.value!r}", lit.line, lit.col) from None
            if n < 0:
                raise SqlError("INTERVAL must be non-negative", lit.line, lit.col)
            text = f"INTERVAL '{n}' MINUTE"
            out.append(Token(Tok.INTERVAL, text, tok.line, tok.col, value=Duration(n)))
            i += 3
            continue
        out.append(tok)
        i += 1
    return out

"""Tokenizer for the read-only Cypher subset.

Keywords are case-insensitive; identifiers may be backtick-quoted to escape
spaces or keyword collisions.  Token positions are byte offsets into the
source text and survive into parse errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import LexError

KEYWORDS = {
    "MATCH",
    "WHERE",
    "RETURN",
    "DISTINCT",
    "ORDER",
    "BY",
    "SKIP",
    "LIMIT",
    "AND",
    "OR",
    "NOT",
    "AS",
    "CONTAINS",
    "STARTS",
    "ENDS",
    "WITH",
    "ASC",
    "DESC",
    "COUNT",
    "COLLECT",
    "TOLOWER",
    "TRUE",
    "FALSE",
}

# kinds: KEYWORD IDENT STRING INT FLOAT PUNCT EOF
PUNCT = {
    "<-",
    "->",
    "<=",
    ">=",
    "<>",
    "(",
    ")",
    "[",
    "]",
    "{",
    "}",
    ":",
    ",",
    ".",
    "-",
    "<",
    ">",
    "=",
    "*",
}

_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t"}


@dataclass
class Token:
    kind: str
    value: Union[str, int, float]
    pos: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return f"{self.kind} {self.value!r}"


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in ("'", '"'):
            start = i
            value, i = _read_string(text, i)
            tokens.append(Token("STRING", value, start))
            continue
        if ch.isdigit():
            tok, i = _read_number(text, i)
            tokens.append(tok)
            continue
        if ch == "`":
            end = text.find("`", i + 1)
            if end < 0:
                raise LexError("unterminated backtick identifier", i)
            tokens.append(Token("IDENT", text[i + 1 : end], i))
            i = end + 1
            continue
        if _is_ident_start(ch):
            start = i
            while i < n and _is_ident_char(text[i]):
                i += 1
            word = text[start:i]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KEYWORD", upper, start))
            else:
                tokens.append(Token("IDENT", word, start))
            continue
        two = text[i : i + 2]
        if two in PUNCT:
            tokens.append(Token("PUNCT", two, i))
            i += 2
            continue
        if ch in PUNCT:
            tokens.append(Token("PUNCT", ch, i))
            i += 1
            continue
        raise LexError(f"illegal character {ch!r}", i)
    tokens.append(Token("EOF", "", n))
    return tokens


def _read_string(text: str, start: int) -> tuple[str, int]:
    quote = text[start]
    out: list[str] = []
    i = start + 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\":
            if i + 1 >= n:
                raise LexError("unterminated string", start)
            esc = text[i + 1]
            out.append(_ESCAPES.get(esc, esc))
            i += 2
            continue
        if ch == quote:
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise LexError("unterminated string", start)


def _read_number(text: str, start: int) -> tuple[Token, int]:
    i = start
    n = len(text)
    while i < n and text[i].isdigit():
        i += 1
    is_float = False
    if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
        is_float = True
        i += 1
        while i < n and text[i].isdigit():
            i += 1
    if i < n and text[i] in ("e", "E"):
        j = i + 1
        if j < n and text[j] in ("+", "-"):
            j += 1
        if j < n and text[j].isdigit():
            is_float = True
            i = j
            while i < n and text[i].isdigit():
                i += 1
    body = text[start:i]
    if is_float:
        return Token("FLOAT", float(body), start), i
    return Token("INT", int(body), start), i

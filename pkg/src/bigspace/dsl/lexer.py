"""Tokenizer for the reaction-rule language."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from ..errors import LexError

KEYWORDS = frozenset({"ctrl", "atomic", "big", "react", "begin", "brs", "end", "init", "rules"})

# longest symbols first so that "-->" wins over "-" and "||" over "|"
SYMBOLS = ("-->", "||", "|", "(", ")", "{", "}", "[", "]", ".", ",", ";", "=", "/", "@", "-")

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>\#[^\n]*)"
    r"|(?P<ctrl>[A-Z][A-Za-z0-9_]*)"
    r"|(?P<word>[a-z_][A-Za-z0-9_]*)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in SYMBOLS) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str       # ident | ctrl-ident | symbol | keyword | integer
    lexeme: str
    line: int
    column: int

    def __str__(self):
        return f"[{self.kind} {self.lexeme}]"


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(line, col, source[pos])
        kind = m.lastgroup
        text = m.group()
        if kind == "ctrl":
            tokens.append(Token("ctrl-ident", text, line, col))
        elif kind == "word":
            tokens.append(Token("keyword" if text in KEYWORDS else "ident", text, line, col))
        elif kind == "int":
            tokens.append(Token("integer", text, line, col))
        elif kind == "sym":
            tokens.append(Token("symbol", text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    return tokens

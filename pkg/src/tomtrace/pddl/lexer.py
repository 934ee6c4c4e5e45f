"""S-expression tokenizer for the PDDL subset.

Symbols are case-insensitive and come out lowercased. String literals keep
their case; they only appear in the ``:utterances`` annotation of problems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class TokenKind(enum.Enum):
    LPAREN = "("
    RPAREN = ")"
    SYMBOL = "symbol"
    KEYWORD = "keyword"
    VARIABLE = "variable"
    STRING = "string"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    line: int
    col: int
    # number of source characters covered, used for error spans
    width: int = 1

    def __str__(self) -> str:
        if self.kind is TokenKind.KEYWORD:
            return ":" + self.value
        if self.kind is TokenKind.VARIABLE:
            return "?" + self.value
        if self.kind is TokenKind.STRING:
            return '"' + self.value + '"'
        return self.value


class PddlError(Exception):
    """Lex or parse failure, located at a 1-based (line, col)."""

    def __init__(self, message: str, line: int = 0, col: int = 0, symbol: str | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.symbol = symbol
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class LexError(PddlError):
    pass


_NAME_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-_.")
_SYMBOL_START = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_=-")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    line, col = 1, 1

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            tokens.append(Token(TokenKind.LPAREN, "(", line, col))
            i += 1
            col += 1
            continue
        if ch == ")":
            tokens.append(Token(TokenKind.RPAREN, ")", line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            chars: list[str] = []
            j = i + 1
            col += 1
            while True:
                if j >= n:
                    raise LexError("unterminated string", start_line, start_col)
                c = text[j]
                if c == "\\" and j + 1 < n and text[j + 1] in '"\\':
                    chars.append(text[j + 1])
                    j += 2
                    col += 2
                    continue
                if c == '"':
                    j += 1
                    col += 1
                    break
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                chars.append(c)
                j += 1
            width = j - i if start_line == line else 1
            tokens.append(Token(TokenKind.STRING, "".join(chars), start_line, start_col, width))
            i = j
            continue

        if ch in "?:":
            kind = TokenKind.VARIABLE if ch == "?" else TokenKind.KEYWORD
            j = i + 1
            while j < n and text[j].lower() in _NAME_CHARS:
                j += 1
            if j == i + 1:
                raise LexError(f"empty name after {ch!r}", line, col, ch)
            tokens.append(Token(kind, text[i + 1 : j].lower(), line, col, j - i))
            col += j - i
            i = j
            continue

        low = ch.lower()
        if low in _SYMBOL_START:
            if low == "=":
                j = i + 1
            else:
                j = i
                while j < n and text[j].lower() in _NAME_CHARS:
                    j += 1
            tokens.append(Token(TokenKind.SYMBOL, text[i:j].lower(), line, col, j - i))
            col += j - i
            i = j
            continue

        raise LexError(f"illegal character {ch!r}", line, col, ch)

    return tokens

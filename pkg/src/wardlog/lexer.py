"""Hand-written lexer for the rule language.

Tokens carry line/column (1-based) for diagnostics. Comments run from `%`
to end of line. `#T` and `#F` are the boolean literals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ast import SourceSpan
from .errors import ParseError

# Token kinds
IDENT = "IDENT"
NUMBER = "NUMBER"
STRING = "STRING"
BOOLEAN = "BOOLEAN"
LPAREN = "LPAREN"
RPAREN = "RPAREN"
LBRACKET = "LBRACKET"
RBRACKET = "RBRACKET"
COMMA = "COMMA"
DOT = "DOT"
AT = "AT"
IMPLIES = "IMPLIES"  # :-
WEIGHT_SEP = "WEIGHT_SEP"  # ::
COLON = "COLON"
ASSIGN = "ASSIGN"  # =
EQ = "EQ"  # ==
NEQ = "NEQ"
LT = "LT"
LE = "LE"
GT = "GT"
GE = "GE"
PLUS = "PLUS"
MINUS = "MINUS"
STAR = "STAR"
SLASH = "SLASH"
CARET = "CARET"
KW_NOT = "not"
KW_AND = "and"
KW_OR = "or"
EOF = "EOF"

KEYWORDS = {"not": KW_NOT, "and": KW_AND, "or": KW_OR}

_PUNCT = {
    "(": LPAREN,
    ")": RPAREN,
    "[": LBRACKET,
    "]": RBRACKET,
    ",": COMMA,
    ".": DOT,
    "@": AT,
    "+": PLUS,
    "-": MINUS,
    "*": STAR,
    "/": SLASH,
    "^": CARET,
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    value: object
    line: int
    column: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, self.line, self.column + len(self.text))


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def error(msg):
        raise ParseError(msg, SourceSpan(line, col, line, col + 1))

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue

        start_line, start_col = line, col

        if c == ":":
            if text.startswith(":-", i):
                tokens.append(Token(IMPLIES, ":-", None, start_line, start_col))
                i += 2
                col += 2
            elif text.startswith("::", i):
                tokens.append(Token(WEIGHT_SEP, "::", None, start_line, start_col))
                i += 2
                col += 2
            else:
                tokens.append(Token(COLON, ":", None, start_line, start_col))
                i += 1
                col += 1
            continue

        if c == "=":
            if text.startswith("==", i):
                tokens.append(Token(EQ, "==", None, start_line, start_col))
                i += 2
                col += 2
            else:
                tokens.append(Token(ASSIGN, "=", None, start_line, start_col))
                i += 1
                col += 1
            continue

        if c == "!":
            if text.startswith("!=", i):
                tokens.append(Token(NEQ, "!=", None, start_line, start_col))
                i += 2
                col += 2
            else:
                error("unexpected '!'")
            continue

        if c == "<":
            if text.startswith("<=", i):
                tokens.append(Token(LE, "<=", None, start_line, start_col))
                i += 2
                col += 2
            else:
                tokens.append(Token(LT, "<", None, start_line, start_col))
                i += 1
                col += 1
            continue

        if c == ">":
            if text.startswith(">=", i):
                tokens.append(Token(GE, ">=", None, start_line, start_col))
                i += 2
                col += 2
            else:
                tokens.append(Token(GT, ">", None, start_line, start_col))
                i += 1
                col += 1
            continue

        if c == "#":
            if text.startswith("#T", i):
                tokens.append(Token(BOOLEAN, "#T", True, start_line, start_col))
                i += 2
                col += 2
            elif text.startswith("#F", i):
                tokens.append(Token(BOOLEAN, "#F", False, start_line, start_col))
                i += 2
                col += 2
            else:
                error("expected #T or #F after '#'")
            continue

        if c in _PUNCT:
            # A dot between digits would have been consumed by the number
            # scanner below, so '.' here always terminates a statement.
            tokens.append(Token(_PUNCT[c], c, None, start_line, start_col))
            i += 1
            col += 1
            continue

        if c == '"':
            i += 1
            col += 1
            chars: list[str] = []
            while i < n and text[i] != '"':
                ch = text[i]
                if ch == "\n":
                    error("unterminated string literal")
                if ch == "\\":
                    if i + 1 >= n:
                        error("unterminated escape")
                    nxt = text[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(nxt)
                    if mapped is None:
                        error(f"unknown escape \\{nxt}")
                    chars.append(mapped)
                    i += 2
                    col += 2
                    continue
                chars.append(ch)
                i += 1
                col += 1
            if i >= n:
                error("unterminated string literal")
            i += 1  # closing quote
            col += 1
            s = "".join(chars)
            tokens.append(Token(STRING, f'"{s}"', s, start_line, start_col))
            continue

        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_double = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_double = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_double = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            value: object = float(lexeme) if is_double else int(lexeme)
            tokens.append(Token(NUMBER, lexeme, value, start_line, start_col))
            col += j - i
            i = j
            continue

        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            kind = KEYWORDS.get(name, IDENT)
            tokens.append(Token(kind, name, name, start_line, start_col))
            col += j - i
            i = j
            continue

        error(f"unexpected character {c!r}")

    tokens.append(Token(EOF, "", None, line, col))
    return tokens

"""Tokenizer shared by the ADL, script and scenario front-ends."""

from __future__ import annotations

import re
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ParseError:
    line: int
    column: int
    message: str
    expected: tuple[str, ...] | None = None

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


class ParseFailure(Exception):
    """Carries every error found while reading a source text."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUMBER, STRING, EOF or the punctuation itself
    value: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<NUMBER>\d+(?:\.\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>->|<=|>=|==|!=|[{}\[\](),.:;|*!?=<>+\-/])
    """,
    re.VERBOSE,
)


def eof_position(text: str) -> tuple[int, int]:
    """Line/column just past the last character, kept on the last line."""
    if not text:
        return 1, 1
    line = text.count("\n", 0, len(text) - 1) + 1
    start = text.rfind("\n", 0, len(text) - 1) + 1
    return line, len(text) - start + (0 if text.endswith("\n") else 1)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseFailure([ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        value = m.group()
        if kind == "punct":
            tokens.append(Token(value, value, line, pos - line_start + 1))
        elif kind == "STRING":
            tokens.append(Token(kind, re.sub(r"\\(.)", r"\1", value[1:-1]), line, pos - line_start + 1))
        elif kind in ("NUMBER", "IDENT"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    eline, ecol = eof_position(text)
    tokens.append(Token("EOF", "", eline, ecol))
    return tokens


def describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.value)


@dataclass
class TokenStream:
    """Cursor over a token list with LL(1) helpers."""

    tokens: list[Token]
    reserved: frozenset[str] = frozenset()
    pos: int = field(default=0)

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def peek_at(self, offset: int) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...] | None = None, tok: Token | None = None):
        tok = tok or self.peek
        raise ParseFailure([ParseError(tok.line, tok.column, message, expected)])

    def at(self, value: str) -> bool:
        tok = self.peek
        return tok.value == value and tok.kind in (value, "IDENT")

    def accept(self, value: str) -> Token | None:
        if self.at(value):
            return self.advance()
        return None

    def expect(self, *values: str) -> Token:
        for v in values:
            if self.at(v):
                return self.advance()
        expected = tuple(f"'{v}'" for v in values)
        self.fail(f"unexpected {describe(self.peek)}", expected)

    def ident(self, what: str = "identifier") -> Token:
        tok = self.peek
        if tok.kind != "IDENT":
            self.fail(f"unexpected {describe(tok)}", (what,))
        if tok.value in self.reserved:
            self.fail(f"keyword {tok.value!r} cannot be used as {what}", (what,))
        return self.advance()

    def number(self) -> Token:
        if self.peek.kind != "NUMBER":
            self.fail(f"unexpected {describe(self.peek)}", ("number",))
        return self.advance()


SIZE_UNITS = {"B": 1, "kB": 10**3, "MB": 10**6, "GB": 10**9}
DURATION_UNITS = {"ms": 1}


def read_quantity(ts: TokenStream, units: dict[str, int], what: str) -> int | float:
    tok = ts.number()
    factor = 1
    if ts.peek.kind == "IDENT" and ts.peek.value in units:
        factor = units[ts.advance().value]
    value = float(tok.value) * factor if "." in tok.value else int(tok.value) * factor
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if what == "size" and not isinstance(value, int):
        ts.fail("size must be a whole number of bytes", tok=tok)
    return value


def format_size(n: int) -> str:
    for unit in ("GB", "MB", "kB"):
        if n and n % SIZE_UNITS[unit] == 0:
            return f"{n // SIZE_UNITS[unit]}{unit}"
    return f"{n}B"


def format_duration(ms: float) -> str:
    if float(ms).is_integer():
        return f"{int(ms)}ms"
    return f"{ms!r}ms"

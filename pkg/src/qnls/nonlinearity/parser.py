"""Recursive-descent parser for interaction polynomials.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') INT)?
    atom   := NUMBER | 'i' | 'z'INT | 'conj' '(' expr ')' | '(' expr ')'

Numbers are read exactly (``0.25`` is 1/4).  Division is allowed only by a
nonzero constant.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .polynomial import I_UNIT, InteractionPoly, QQi


class ParseError(ValueError):
    """Malformed polynomial text; ``position`` is a 0-based column."""

    def __init__(self, message: str, text: str, position: int):
        self.message = message
        self.text = text
        self.position = position
        super().__init__(f"{message} at column {position + 1}")

    def caret(self) -> str:
        """Source line with a caret under the offending column."""
        return f"{self.text}\n{' ' * self.position}^ {self.message}"


@dataclass
class _Tok:
    kind: str
    value: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>z\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<pow>\*\*|\^)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, l: int):
        self.text = text
        self.l = l
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ParseError(msg, self.text, tok.pos)

    def eat(self, kind: str, value: str | None = None) -> _Tok:
        t = self.tok
        if t.kind != kind or (value is not None and t.value != value):
            want = value or kind
            got = t.value or "end of input"
            self.error(f"expected {want!r}, found {got!r}")
        self.i += 1
        return t

    def parse(self) -> InteractionPoly:
        if self.tok.kind == "end":
            self.error("empty expression")
        p = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.value!r}")
        return p

    def expr(self) -> InteractionPoly:
        p = self.term()
        while self.tok.kind == "op" and self.tok.value in "+-":
            op = self.eat("op").value
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> InteractionPoly:
        p = self.unary()
        while self.tok.kind == "op" and self.tok.value in "*/":
            optok = self.eat("op")
            q = self.unary()
            if optok.value == "*":
                p = p * q
            else:
                c = q.as_constant()
                if c is None:
                    self.error("non-polynomial construct (division by variable)", optok)
                if not c:
                    self.error("division by zero", optok)
                p = p * (QQi(Fraction(1)) / c)
        return p

    def unary(self) -> InteractionPoly:
        if self.tok.kind == "op" and self.tok.value in "+-":
            op = self.eat("op").value
            p = self.unary()
            return -p if op == "-" else p
        return self.power()

    def power(self) -> InteractionPoly:
        base = self.atom()
        if self.tok.kind == "pow":
            self.eat("pow")
            t = self.tok
            if t.kind == "op" and t.value == "-":
                self.error("non-polynomial construct (negative power)")
            if t.kind != "num" or not t.value.isdigit():
                self.error("exponent must be a non-negative integer")
            self.i += 1
            return base ** int(t.value)
        return base

    def atom(self) -> InteractionPoly:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return InteractionPoly.constant(self.l, Fraction(t.value))
        if t.kind == "var":
            j = int(t.value[1:])
            if not 1 <= j <= self.l:
                self.error(f"variable {t.value} out of range 1..{self.l}")
            self.i += 1
            return InteractionPoly.variable(self.l, j - 1)
        if t.kind == "ident":
            if t.value in ("i", "I"):
                self.i += 1
                return InteractionPoly.constant(self.l, I_UNIT)
            if t.value == "conj":
                self.i += 1
                self.eat("op", "(")
                p = self.expr()
                self.eat("op", ")")
                return p.conj()
            self.error(f"unknown identifier {t.value!r}")
        if t.kind == "op" and t.value == "(":
            self.i += 1
            p = self.expr()
            self.eat("op", ")")
            return p
        self.error(f"unexpected {t.value or 'end of input'!r}")


def parse_poly(text: str, l: int) -> InteractionPoly:
    """Parse ``text`` as a polynomial in z1..zl and their conjugates."""
    if l < 1:
        raise ValueError("number of variables must be positive")
    return _Parser(text, l).parse()

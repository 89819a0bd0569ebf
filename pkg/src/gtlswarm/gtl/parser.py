"""Recursive-descent parser for the GTL text syntax.

Precedence from tightest to loosest: unary operators, ``U`` (right
associative), ``&``, ``|`` (both left associative).  Atoms are
``y <op> [v, ...]``, ``y <op> c`` (scalar broadcast to the label dimension)
or ``[a, ...] . y <op> c``, plus the constants ``true`` and ``false``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import (FALSE, TRUE, Always, AlwaysEventually, And, Atom, Eventually,
                      EventuallyAlways, ExistsN, Formula, Next, Not, Or, Until, compare)


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line, self.column, self.pos = line, col, pos


class DimensionError(ValueError):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<cmp><=|>=|=|<|>)
  | (?P<exists>E\^)
  | (?P<word>[A-Za-z_]+)
  | (?P<punct>[\[\](),&|!.])
""", re.VERBOSE)

_UNARY = {"X": Next, "F": Eventually, "G": Always, "GF": AlwaysEventually,
          "FG": EventuallyAlways}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, dim: int | None):
        self.text = text
        self.toks = _lex(text)
        self.i = 0
        self.dim = dim

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(msg, self.text, tok.pos)

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            self.fail(f"expected {text!r} but found {t.text or 'end of input'!r}")
        return self.take()

    def formula(self) -> Formula:
        out = self.conjunction()
        while self.peek().text == "|":
            self.take()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.until()
        while self.peek().text == "&":
            self.take()
            out = And(out, self.until())
        return out

    def until(self) -> Formula:
        left = self.unary()
        if self.peek().kind == "word" and self.peek().text == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        t = self.peek()
        if t.text == "!":
            self.take()
            return Not(self.unary())
        if t.kind == "word" and t.text in _UNARY:
            self.take()
            return _UNARY[t.text](self.unary())
        if t.kind == "exists":
            self.take()
            n = self.take()
            if n.kind != "num" or not re.fullmatch(r"\d+", n.text) or int(n.text) < 1:
                self.fail("E^ must be followed by a positive integer", n)
            o = self.take()
            if o.kind != "word" or set(o.text) != {"o"}:
                self.fail("expected one or more 'o' after E^N", o)
            depth = len(o.text)
            while self.peek().kind == "word" and set(self.peek().text) == {"o"}:
                depth += len(self.take().text)
            return ExistsN(int(n.text), depth, self.unary())
        if t.text == "(":
            self.take()
            inner = self.formula()
            self.expect(")")
            return inner
        return self.atom()

    def vector(self) -> tuple[float, ...]:
        self.expect("[")
        vals = [self.number()]
        while self.peek().text == ",":
            self.take()
            vals.append(self.number())
        self.expect("]")
        return tuple(vals)

    def number(self) -> float:
        t = self.take()
        if t.kind != "num":
            self.fail(f"expected a number but found {t.text or 'end of input'!r}", t)
        return float(t.text)

    def cmp(self) -> str:
        t = self.take()
        if t.kind != "cmp":
            self.fail(f"expected a comparison but found {t.text or 'end of input'!r}", t)
        return t.text

    def check_dim(self, d: int, tok: _Tok):
        if self.dim is None:
            self.dim = d
        elif d != self.dim:
            raise DimensionError(
                f"atom at column {tok.pos + 1} has dimension {d}, labels have {self.dim}")

    def atom(self) -> Formula:
        t = self.peek()
        if t.kind == "word" and t.text == "true":
            self.take()
            return TRUE
        if t.kind == "word" and t.text == "false":
            self.take()
            return FALSE
        if t.kind == "word" and t.text == "y":
            self.take()
            op = self.cmp()
            if self.peek().text == "[":
                vec = self.vector()
            else:
                c = self.number()
                vec = (c,) * (self.dim or 1)
            self.check_dim(len(vec), t)
            return compare(op, vec)
        if t.text == "[":
            row = self.vector()
            self.expect(".")
            y = self.take()
            if y.text != "y":
                self.fail("expected 'y' after the row vector", y)
            op = self.cmp()
            c = self.number()
            self.check_dim(len(row), t)
            return compare(op, (c,), row=row)
        self.fail(f"unexpected {t.text or 'end of input'!r}")


def parse_formula(text: str, dim: int | None = None) -> Formula:
    """Parse ``text``; with ``dim`` given, atoms are checked against it."""
    p = _Parser(text, dim)
    out = p.formula()
    if p.peek().kind != "eof":
        p.fail(f"unexpected trailing {p.peek().text!r}")
    if dim is None and p.dim is not None:
        # scalar atoms seen before the first vector were broadcast to one entry
        widths = {a.dim for a in out.walk() if isinstance(a, Atom) and a.A}
        if len(widths) > 1:
            raise DimensionError(f"atoms disagree on the label dimension: {sorted(widths)}")
    return out

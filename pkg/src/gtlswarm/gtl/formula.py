"""Abstract syntax of graph temporal logic formulas.

Nodes are frozen dataclasses, so structurally equal subformulas hash equal
and can be shared (the encoder memoizes on them).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

DELTA = 1e-6  # tightening applied to strict comparisons


class Formula:
    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def walk(self) -> Iterator["Formula"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self) -> str:
        from .printer import to_text
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    """Polyhedral proposition ``A y <= b`` over the node label ``y``.

    Rows flagged strict mean ``<``; they are evaluated as ``<= b - DELTA``.
    ``form`` remembers the surface syntax for printing.
    """

    A: tuple
    b: tuple
    strict: tuple
    form: tuple | None = None

    @property
    def dim(self) -> int:
        return len(self.A[0]) if self.A else 0

    @property
    def rows(self) -> int:
        return len(self.A)

    def matrix(self) -> np.ndarray:
        return np.array(self.A, dtype=float).reshape(len(self.A), -1)

    def effective_b(self) -> np.ndarray:
        b = np.array(self.b, dtype=float)
        return b - DELTA * np.array(self.strict, dtype=float)

    def holds(self, y, tol: float = 0.0) -> bool:
        if not self.A:
            return True
        return bool(np.all(self.matrix() @ np.asarray(y, dtype=float) <= self.effective_b() + tol))


def atom(A, b, strict=None, form=None) -> Atom:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ValueError("atom matrix and bound disagree on the row count")
    if strict is None:
        strict = (False,) * len(b)
    return Atom(tuple(tuple(float(v) for v in r) for r in A), tuple(float(v) for v in b),
                tuple(bool(s) for s in strict), form)


def compare(op: str, vec, row=None) -> Atom:
    """Atom for ``y op vec`` or, with ``row`` given, ``row . y op vec``."""
    vec = tuple(float(v) for v in np.atleast_1d(vec))
    if row is None:
        d = len(vec)
        eye = np.eye(d)
        base, rhs = eye, np.array(vec)
        form = ("vec", op, vec)
    else:
        if len(vec) != 1:
            raise ValueError("row comparisons take a scalar right-hand side")
        base = np.atleast_2d(np.asarray(row, dtype=float))
        rhs = np.array(vec)
        form = ("row", op, tuple(float(v) for v in row), vec[0])
    n = base.shape[0]
    if op in ("<=", "<"):
        return atom(base, rhs, (op == "<",) * n, form)
    if op in (">=", ">"):
        return atom(-base, -rhs, (op == ">",) * n, form)
    if op == "=":
        return atom(np.vstack([base, -base]), np.concatenate([rhs, -rhs]), None, form)
    raise ValueError(f"unknown comparison {op!r}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class AlwaysEventually(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class EventuallyAlways(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class ExistsN(Formula):
    """At least ``count`` nodes of the ``depth``-step neighborhood satisfy ``arg``."""

    count: int
    depth: int
    arg: Formula

    def __post_init__(self):
        if self.count < 1 or self.depth < 1:
            raise ValueError("ExistsN needs count >= 1 and depth >= 1")

    def children(self):
        return (self.arg,)


UNARY = (Not, Next, Eventually, Always, AlwaysEventually, EventuallyAlways)
BINARY = (And, Or, Until)


def conj(*fs: Formula) -> Formula:
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def label_dim(phi: Formula) -> int | None:
    """Common label dimension of the atoms in ``phi`` (None if there are none)."""
    dims = {a.dim for a in phi.walk() if isinstance(a, Atom) and a.A}
    if len(dims) > 1:
        raise ValueError(f"atoms disagree on the label dimension: {sorted(dims)}")
    return dims.pop() if dims else None


def temporal_depth(phi: Formula) -> int:
    own = 1 if isinstance(phi, (Next, Until, Eventually, Always,
                                AlwaysEventually, EventuallyAlways)) else 0
    return own + max((temporal_depth(c) for c in phi.children()), default=0)


def size(phi: Formula) -> int:
    return sum(1 for _ in phi.walk())

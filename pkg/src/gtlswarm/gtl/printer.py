"""Formula to text; output reparses to an identical tree."""

from __future__ import annotations

from .formula import (Always, AlwaysEventually, And, Atom, Const, Eventually,
                      EventuallyAlways, ExistsN, Formula, Next, Not, Or, Until)

_OR, _AND, _UNTIL, _UNARY, _ATOM = 1, 2, 3, 4, 5
_PREFIX = {Next: "X", Eventually: "F", Always: "G", AlwaysEventually: "GF",
           EventuallyAlways: "FG"}


def _num(v: float) -> str:
    return repr(float(v))


def _vec(vs) -> str:
    return "[" + ", ".join(_num(v) for v in vs) + "]"


def _atom(a: Atom) -> str:
    if a.form is not None:
        if a.form[0] == "vec":
            _, op, vec = a.form
            return f"y {op} {_vec(vec)}"
        _, op, row, c = a.form
        return f"{_vec(row)} . y {op} {_num(c)}"
    if not a.A:
        return "true"
    parts = [f"{_vec(r)} . y {'<' if s else '<='} {_num(b)}"
             for r, b, s in zip(a.A, a.b, a.strict)]
    return " & ".join(parts) if len(parts) == 1 else "(" + " & ".join(parts) + ")"


def _level(phi: Formula) -> int:
    if isinstance(phi, Or):
        return _OR
    if isinstance(phi, And):
        return _AND
    if isinstance(phi, Until):
        return _UNTIL
    if isinstance(phi, (Atom, Const)):
        return _ATOM
    return _UNARY


def _wrap(phi: Formula, need: int) -> str:
    s = to_text(phi)
    return f"({s})" if _level(phi) < need else s


def to_text(phi: Formula) -> str:
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom):
        return _atom(phi)
    if isinstance(phi, Or):
        return f"{_wrap(phi.left, _OR)} | {_wrap(phi.right, _AND)}"
    if isinstance(phi, And):
        return f"{_wrap(phi.left, _AND)} & {_wrap(phi.right, _UNTIL)}"
    if isinstance(phi, Until):
        return f"{_wrap(phi.left, _UNARY)} U {_wrap(phi.right, _UNTIL)}"
    if isinstance(phi, Not):
        return "!" + _wrap(phi.arg, _UNARY)
    if isinstance(phi, ExistsN):
        return f"E^{phi.count} {'o' * phi.depth} {_wrap(phi.arg, _UNARY)}"
    for cls, op in _PREFIX.items():
        if isinstance(phi, cls):
            return f"{op} {_wrap(phi.arg, _UNARY)}"
    raise TypeError(f"not a formula: {phi!r}")

"""Model builder shared by every solver engine.

A :class:`Model` holds variables (continuous or binary, with bounds), a
linear objective and linear rows with a sense of ``<=``, ``>=`` or ``==``.
Expressions are built with :class:`LinExpr`, a sparse map from variable
index to coefficient plus a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

INF = math.inf

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
TIME_LIMIT = "time-limit"
NUMERICAL = "numerical-failure"

FEAS_TOL = 1e-7
INT_TOL = 1e-6

_SENSES = ("<=", ">=", "==")


class ModelError(ValueError):
    """Raised for malformed models (bad bounds, unknown variables...)."""


class LinExpr:
    """Sparse linear expression ``sum(coef[i] * x[i]) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[int, float] | None = None, const: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @classmethod
    def var(cls, index: int, coef: float = 1.0) -> "LinExpr":
        return cls({index: float(coef)})

    @classmethod
    def lift(cls, value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        return cls(const=float(value))

    @classmethod
    def total(cls, exprs: Iterable) -> "LinExpr":
        out = cls()
        for e in exprs:
            out.iadd(e)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def iadd(self, other, scale: float = 1.0) -> "LinExpr":
        """In-place ``self += scale * other``."""
        if isinstance(other, LinExpr):
            t = self.terms
            for k, v in other.terms.items():
                t[k] = t.get(k, 0.0) + scale * v
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        out = self * -1.0
        return out.iadd(other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if isinstance(scalar, LinExpr):
            raise TypeError("product of two expressions is not linear")
        s = float(scalar)
        return LinExpr({k: s * v for k, v in self.terms.items()}, s * self.const)

    __rmul__ = __mul__

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[k] for k, v in self.terms.items())

    def is_constant(self) -> bool:
        return all(v == 0.0 for v in self.terms.values())

    def __repr__(self) -> str:
        parts = [f"{v:+g}*x{k}" for k, v in sorted(self.terms.items())]
        return "LinExpr(" + " ".join(parts) + f" {self.const:+g})"


@dataclass
class Row:
    index: np.ndarray
    coef: np.ndarray
    sense: str
    rhs: float
    name: str


@dataclass
class Solution:
    """Result of a solve.  ``duals[i]`` is d(objective)/d(rhs of row i)."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    bound: float | None = None
    nodes: int = 0
    iterations: int = 0
    message: str = ""
    incumbents: list[tuple[float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def has_point(self) -> bool:
        return self.x is not None


class Model:
    """Linear (mixed-binary) optimization model."""

    def __init__(self, name: str = "model", sense: str = "min"):
        if sense not in ("min", "max"):
            raise ModelError(f"unknown objective sense {sense!r}")
        self.name = name
        self.sense = sense
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.binary: list[bool] = []
        self.objective = LinExpr()
        self.rows: list[Row] = []
        # constant rows that can never hold (e.g. 0 <= -1)
        self.conflicts: list[str] = []
        self._name_set: set[str] = set()

    # variables -----------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_binaries(self) -> int:
        return sum(self.binary)

    def add_var(self, name: str | None = None, lb: float = 0.0, ub: float = INF,
                binary: bool = False) -> int:
        idx = len(self.names)
        if name is None:
            name = f"v{idx}"
        if name in self._name_set:
            raise ModelError(f"duplicate variable name {name!r}")
        lb, ub = float(lb), float(ub)
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub or math.isnan(lb) or math.isnan(ub):
            raise ModelError(f"empty bounds for {name}: [{lb}, {ub}]")
        self._name_set.add(name)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.binary.append(bool(binary))
        return idx

    def add_binary(self, name: str | None = None) -> int:
        return self.add_var(name, 0.0, 1.0, binary=True)

    def fix(self, index: int, value: float) -> None:
        self.lb[index] = self.ub[index] = float(value)

    # rows ----------------------------------------------------------------
    def add_constr(self, lhs, sense: str, rhs=0.0, name: str | None = None) -> int | None:
        """Add ``lhs sense rhs``; both sides may be expressions or numbers.

        Returns the row index, or None when the row is constant (constant rows
        that fail are remembered in ``conflicts``).
        """
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        expr = LinExpr.lift(lhs) - LinExpr.lift(rhs)
        items = [(k, v) for k, v in sorted(expr.terms.items()) if v != 0.0]
        b = -expr.const
        if name is None:
            name = f"c{len(self.rows) + len(self.conflicts)}"
        if not items:
            ok = {"<=": 0.0 <= b + FEAS_TOL, ">=": 0.0 >= b - FEAS_TOL,
                  "==": abs(b) <= FEAS_TOL}[sense]
            if not ok:
                self.conflicts.append(name)
            return None
        idx = np.fromiter((k for k, _ in items), dtype=np.int64, count=len(items))
        if idx[-1] >= self.num_vars:
            raise ModelError(f"row {name} references unknown variable {idx[-1]}")
        coef = np.fromiter((v for _, v in items), dtype=float, count=len(items))
        self.rows.append(Row(idx, coef, sense, float(b), name))
        return len(self.rows) - 1

    def set_objective(self, expr, sense: str | None = None) -> None:
        self.objective = LinExpr.lift(expr).copy()
        if sense is not None:
            if sense not in ("min", "max"):
                raise ModelError(f"unknown objective sense {sense!r}")
            self.sense = sense

    # dense/sparse views -------------------------------------------------
    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for k, v in self.objective.terms.items():
            c[k] += v
        return c

    def matrix(self) -> sp.csr_matrix:
        n = self.num_vars
        if not self.rows:
            return sp.csr_matrix((0, n))
        indptr = np.zeros(len(self.rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r.index) for r in self.rows])
        cols = np.concatenate([r.index for r in self.rows])
        vals = np.concatenate([r.coef for r in self.rows])
        return sp.csr_matrix((vals, cols, indptr), shape=(len(self.rows), n))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            lo[i] = -INF if r.sense == "<=" else r.rhs
            hi[i] = INF if r.sense == ">=" else r.rhs
        return lo, hi

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lb, dtype=float), np.array(self.ub, dtype=float)

    # checks -------------------------------------------------------------
    def max_violation(self, x: np.ndarray) -> float:
        """Largest violation of any row or bound at point ``x``."""
        if self.conflicts:
            return INF
        x = np.asarray(x, dtype=float)
        lb, ub = self.bounds()
        worst = 0.0
        if len(x):
            worst = max(float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        if self.rows:
            ax = self.matrix() @ x
            lo, hi = self.row_bounds()
            worst = max(worst, float(np.max(lo - ax, initial=0.0)),
                        float(np.max(ax - hi, initial=0.0)))
        return worst

    def max_integrality_gap(self, x: np.ndarray) -> float:
        b = np.array(self.binary, dtype=bool)
        if not b.any():
            return 0.0
        xb = np.asarray(x)[b]
        return float(np.max(np.abs(xb - np.round(xb))))

    def objective_value(self, x: np.ndarray) -> float:
        return self.objective.value(np.asarray(x, dtype=float))

    def copy(self) -> "Model":
        m = Model(self.name, self.sense)
        m.names = list(self.names)
        m.lb = list(self.lb)
        m.ub = list(self.ub)
        m.binary = list(self.binary)
        m.objective = self.objective.copy()
        m.rows = list(self.rows)
        m.conflicts = list(self.conflicts)
        m._name_set = set(self._name_set)
        return m

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ModelError(f"unknown variable {name!r}") from None

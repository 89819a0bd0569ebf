"""Mixed-integer encoding of GTL formulas over lasso-shaped density trajectories.

Density variables ``x^s(t)`` for ``t = 0..k`` and loop binaries ``l_1..l_k``
(exactly one is 1; ``l_j = 1`` makes position ``j`` the successor of ``k``)
are shared by every formula added to a :class:`ConstraintSystem`.

Each subformula occurrence is encoded in one of three modes:

``ENF``
    the formula must hold (possibly under a guard); emits rows only.
``POS``
    returns a literal ``w`` in [0, 1] with ``w > 0`` only if the formula holds.
``NEG``
    returns a literal ``w`` in [0, 1] with ``w < 1`` only if the formula fails.

Pinning a POS literal to 1 forces the formula; the converse direction is
free, so satisfying assignments always exist when the formula can hold.
Negation swaps POS and NEG.  Binaries are only needed for atoms and counting
operators outside ENF context; Boolean and temporal connectives use
continuous auxiliaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.graph import InputError, LabeledGraph, neighbor_set
from ..gtl.formula import (DELTA, Always, AlwaysEventually, And, Atom, Const,
                           Eventually, EventuallyAlways, ExistsN, Formula, Next, Not,
                           Or, Until, label_dim)
from ..opt.model import INF, LinExpr, Model

ENF, POS, NEG = "enf", "pos", "neg"
_FLIP = {POS: NEG, NEG: POS}


def _row_bound(graph: LabeledGraph, a: np.ndarray, i: int) -> float:
    """|offset| + sum|coef| of the row ``a . f_i`` over the stacked densities."""
    lab = graph.labels[i]
    return abs(float(a @ lab.offset)) + float(np.abs(a @ lab.stacked()).sum())


def choose_bigM(graph: LabeledGraph, phi: Formula | None) -> float:
    """Big-M constant bounding ``|a . f_i(x) - b|`` for every atom row and node."""
    best = 0.0
    if phi is not None:
        atoms = {a for a in phi.walk() if isinstance(a, Atom) and a.A}
        for at in atoms:
            A = at.matrix()
            b = at.effective_b()
            for r in range(A.shape[0]):
                for i in range(graph.n_r):
                    best = max(best, _row_bound(graph, A[r], i) + abs(float(b[r])))
    return best + 1.0


def loop_bigM(graph: LabeledGraph) -> float:
    """Bound on |f_i(x) - f_i(x')| over pairs of simplex points, plus one."""
    best = 0.0
    for lab in graph.labels:
        span = sum(np.ptp(c, axis=1) for c in lab.coeffs)
        best = max(best, float(np.max(span, initial=0.0)))
    return best + 1.0


@dataclass
class EncodingStats:
    atom_binaries: int = 0
    count_binaries: int = 0
    continuous: int = 0
    rows_by_kind: dict = field(default_factory=dict)

    def bump(self, kind: str, n: int = 1):
        self.rows_by_kind[kind] = self.rows_by_kind.get(kind, 0) + n


class ConstraintSystem:
    """Variables and rows for one horizon; formulas are added with :meth:`enforce`."""

    def __init__(self, graph: LabeledGraph, horizon: int, model: Model | None = None,
                 x_vars: list[np.ndarray] | None = None, bigM: float | None = None,
                 density_bounds: tuple[float, float] = (0.0, 1.0)):
        if horizon < 1:
            raise InputError("horizon must be >= 1")
        self.graph = graph
        self.horizon = horizon
        self.model = model if model is not None else Model("gtl")
        self.stats = EncodingStats()
        self.bigM = bigM
        self.loop_M = loop_bigM(graph)
        if x_vars is None:
            lo, hi = density_bounds
            x_vars = [np.array([[self.model.add_var(f"x_s{s}_t{t}_n{i}", lo, hi)
                                 for i in range(graph.n_r)] for t in range(horizon + 1)])
                      for s in range(graph.m)]
        self.x = x_vars
        self.roots: dict[int, list[int]] = {}
        self._memo: dict = {}
        self._hood: dict = {}
        self._label_cache: dict = {}
        self._uid = 0
        self.loop: list[int] = []
        self.encode_loop()

    # helpers --------------------------------------------------------------
    def _name(self, prefix: str) -> str:
        self._uid += 1
        return f"{prefix}{self._uid}"

    def _aux(self) -> int:
        self.stats.continuous += 1
        return self.model.add_var(self._name("w"), 0.0, 1.0)

    def _binary(self, kind: str) -> int:
        if kind == "atom":
            self.stats.atom_binaries += 1
        else:
            self.stats.count_binaries += 1
        return self.model.add_binary(self._name("z" if kind == "atom" else "e"))

    def _add(self, kind: str, lhs, sense: str, rhs=0.0):
        r = self.model.add_constr(lhs, sense, rhs)
        if r is not None:
            self.stats.bump(kind)
        return r

    @property
    def num_binaries(self) -> int:
        return self.model.num_binaries

    def loop_var(self, j: int) -> LinExpr:
        return LinExpr.var(self.loop[j - 1])

    def loop_upto(self, j: int) -> LinExpr:
        """``sum_{i <= j} l_i``: 1 iff position ``j`` lies on the loop."""
        return LinExpr({self.loop[i - 1]: 1.0 for i in range(1, j + 1)})

    def neighbors(self, v: int, depth: int) -> frozenset:
        key = (v, depth)
        if key not in self._hood:
            self._hood[key] = neighbor_set(self.graph, [v], depth)
        return self._hood[key]

    def label_expr(self, i: int, t: int, a: np.ndarray) -> LinExpr:
        """``a . f_i(x(t))`` as an expression over the density variables."""
        key = (i, t, a.tobytes())
        hit = self._label_cache.get(key)
        if hit is not None:
            return hit
        lab = self.graph.labels[i]
        coef = a @ lab.stacked()
        vars_t = np.concatenate([self.x[s][t] for s in range(self.graph.m)])
        nz = np.flatnonzero(coef)
        expr = LinExpr(dict(zip(vars_t[nz].tolist(), coef[nz].tolist())), float(a @ lab.offset))
        self._label_cache[key] = expr
        return expr

    # loop -----------------------------------------------------------------
    def encode_loop(self) -> None:
        """Loop binaries, their uniqueness row and the label-periodicity rows."""
        k = self.horizon
        self.loop = [self.model.add_binary(f"l_{j}") for j in range(1, k + 1)]
        self._add("loop", LinExpr({v: 1.0 for v in self.loop}), "==", 1.0)
        P = self.loop_M
        eye = np.eye(self.graph.d)
        for j in range(1, k + 1):
            relax = P * (1.0 - self.loop_var(j))
            for i in range(self.graph.n_r):
                for r in range(self.graph.d):
                    diff = self.label_expr(i, k, eye[r]) - self.label_expr(i, j - 1, eye[r])
                    self._add("loop", diff - relax, "<=", 0.0)
                    self._add("loop", diff + relax, ">=", 0.0)

    def add_density_loop_rows(self) -> None:
        """Also tie the densities themselves: ``x(k) = x(l-1)``."""
        k = self.horizon
        for j in range(1, k + 1):
            relax = 1.0 - self.loop_var(j)
            for s in range(self.graph.m):
                for i in range(self.graph.n_r):
                    diff = LinExpr({int(self.x[s][k][i]): 1.0}) - LinExpr.var(int(self.x[s][j - 1][i]))
                    self._add("density-loop", diff - relax, "<=", 0.0)
                    self._add("density-loop", diff + relax, ">=", 0.0)

    def add_simplex_rows(self) -> None:
        for s in range(self.graph.m):
            for t in range(self.horizon + 1):
                self._add("simplex", LinExpr({int(v): 1.0 for v in self.x[s][t]}), "==", 1.0)

    # public ----------------------------------------------------------------
    def enforce(self, phi: Formula, nodes) -> list[int]:
        """Require ``phi`` at time 0 at every node; returns the root variables."""
        d = label_dim(phi)
        if d is not None and d != self.graph.d:
            raise InputError(f"formula atoms have dimension {d}, labels have {self.graph.d}")
        self.bigM = max(self.bigM or 0.0, choose_bigM(self.graph, phi))
        roots = []
        for v in nodes:
            v = int(v)
            if not 0 <= v < self.graph.n_r:
                raise InputError(f"node {v} out of range")
            root = self.model.add_var(self._name(f"root_n{v}_"), 1.0, 1.0)
            self._enf(phi, v, 0, [LinExpr.var(root)])
            self.roots.setdefault(v, []).append(root)
            roots.append(root)
        return roots

    # ENF mode ---------------------------------------------------------------
    @staticmethod
    def _guard(guards: list[LinExpr]) -> LinExpr:
        g = LinExpr.total(guards)
        g.const -= len(guards) - 1
        return g

    def _require(self, lit: LinExpr, guards: list[LinExpr]) -> None:
        self._add("require", lit - self._guard(guards), ">=", 0.0)

    def _enf(self, phi: Formula, v: int, t: int, guards: list[LinExpr]) -> None:
        k = self.horizon
        if isinstance(phi, Const):
            if not phi.value:
                self._add("require", self._guard(guards), "<=", 0.0)
            return
        if isinstance(phi, Atom):
            if not phi.A:
                return
            relax = 1.0 - self._guard(guards)
            A, b = phi.matrix(), phi.effective_b()
            for r in range(A.shape[0]):
                self._add("atom", self.label_expr(v, t, A[r]) - self.bigM * relax, "<=", float(b[r]))
            return
        if isinstance(phi, And):
            self._enf(phi.left, v, t, guards)
            self._enf(phi.right, v, t, guards)
            return
        if isinstance(phi, Not) and isinstance(phi.arg, Not):
            self._enf(phi.arg.arg, v, t, guards)
            return
        if isinstance(phi, Next):
            if t < k:
                self._enf(phi.arg, v, t + 1, guards)
            else:
                for j in range(1, k + 1):
                    self._enf(phi.arg, v, j, guards + [self.loop_var(j)])
            return
        if isinstance(phi, Always):
            for j in range(t, k + 1):
                self._enf(phi.arg, v, j, guards)
            for j in range(1, t):
                self._enf(phi.arg, v, j, guards + [self.loop_upto(j)])
            return
        if isinstance(phi, EventuallyAlways):
            for j in range(1, k + 1):
                self._enf(phi.arg, v, j, guards + [self.loop_upto(j)])
            return
        if isinstance(phi, Or):
            lits = [self.lit(phi.left, v, t, POS), self.lit(phi.right, v, t, POS)]
            self._require(LinExpr.total(lits), guards)
            return
        if isinstance(phi, ExistsN):
            hood = sorted(self.neighbors(v, phi.depth))
            if len(hood) < phi.count:
                self._add("require", self._guard(guards), "<=", 0.0)
                return
            zs = LinExpr.total(self.lit(phi.arg, u, t, POS) for u in hood)
            self._add("count", zs - phi.count * self._guard(guards), ">=", 0.0)
            return
        self._require(self.lit(phi, v, t, POS), guards)

    # POS / NEG mode ----------------------------------------------------------
    @staticmethod
    def _const(e: LinExpr):
        return e.const if e.is_constant() else None

    def conj(self, lits: list[LinExpr], mode: str) -> LinExpr:
        keep = []
        for e in lits:
            c = self._const(e)
            if c is None:
                keep.append(e)
            elif c <= 0.0:
                return LinExpr(const=0.0)
        if not keep:
            return LinExpr(const=1.0)
        if len(keep) == 1:
            return keep[0]
        y = LinExpr.var(self._aux())
        if mode == POS:
            for e in keep:
                self._add("and", y - e, "<=", 0.0)
        else:
            self._add("and", y - LinExpr.total(keep), ">=", -(len(keep) - 1.0))
        return y

    def disj(self, lits: list[LinExpr], mode: str) -> LinExpr:
        keep = []
        for e in lits:
            c = self._const(e)
            if c is None:
                keep.append(e)
            elif c >= 1.0:
                return LinExpr(const=1.0)
        if not keep:
            return LinExpr(const=0.0)
        if len(keep) == 1:
            return keep[0]
        y = LinExpr.var(self._aux())
        if mode == POS:
            self._add("or", y - LinExpr.total(keep), "<=", 0.0)
        else:
            for e in keep:
                self._add("or", y - e, ">=", 0.0)
        return y

    def lit(self, phi: Formula, v: int, t: int, mode: str) -> LinExpr:
        if isinstance(phi, (AlwaysEventually, EventuallyAlways)):
            t = -1  # independent of the starting time
        key = (phi, v, t, mode)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._lit(phi, v, t, mode)
        self._memo[key] = out
        return out

    def _atom_lit(self, phi: Atom, v: int, t: int, mode: str) -> LinExpr:
        if not phi.A:
            return LinExpr(const=1.0)
        A, b = phi.matrix(), phi.effective_b()
        P = self.bigM
        if mode == POS:
            z = self._binary("atom")
            for r in range(A.shape[0]):
                self._add("atom", self.label_expr(v, t, A[r]) + P * LinExpr.var(z), "<=",
                          float(b[r]) + P)
            return LinExpr.var(z)
        # NEG: u_r = 1 certifies that row r is violated
        us = []
        for r in range(A.shape[0]):
            u = self._binary("atom")
            us.append(u)
            self._add("atom", self.label_expr(v, t, A[r]) - P * LinExpr.var(u), ">=",
                      float(b[r]) + DELTA - P)
        total = LinExpr({u: 1.0 for u in us})
        if len(us) > 1:
            self._add("atom", total, "<=", 1.0)
        return 1.0 - total

    def _until_chain(self, phi: Until, v: int, mode: str) -> list[LinExpr]:
        k = self.horizon
        key = ("until-chain", phi, v, mode)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        a = [self.lit(phi.left, v, j, mode) for j in range(k + 1)]
        b = [self.lit(phi.right, v, j, mode) for j in range(k + 1)]
        # first pass: the obligation is met before leaving the stored prefix
        inner = [None] * (k + 2)
        inner[k + 1] = LinExpr(const=0.0)
        for j in range(k, 0, -1):
            inner[j] = self.disj([b[j], self.conj([a[j], inner[j + 1]], mode)], mode)
        wrap = self.disj([self.conj([self.loop_var(j), inner[j]], mode)
                          for j in range(1, k + 1)], mode)
        full = [None] * (k + 2)
        full[k + 1] = wrap
        for j in range(k, -1, -1):
            full[j] = self.disj([b[j], self.conj([a[j], full[j + 1]], mode)], mode)
        self._memo[key] = full
        return full

    def _lit(self, phi: Formula, v: int, t: int, mode: str) -> LinExpr:
        k = self.horizon
        if isinstance(phi, Const):
            return LinExpr(const=1.0 if phi.value else 0.0)
        if isinstance(phi, Atom):
            return self._atom_lit(phi, v, t, mode)
        if isinstance(phi, Not):
            return 1.0 - self.lit(phi.arg, v, t, _FLIP[mode])
        if isinstance(phi, And):
            return self.conj([self.lit(phi.left, v, t, mode), self.lit(phi.right, v, t, mode)], mode)
        if isinstance(phi, Or):
            return self.disj([self.lit(phi.left, v, t, mode), self.lit(phi.right, v, t, mode)], mode)
        if isinstance(phi, Next):
            if t < k:
                return self.lit(phi.arg, v, t + 1, mode)
            return self.disj([self.conj([self.loop_var(j), self.lit(phi.arg, v, j, mode)], mode)
                              for j in range(1, k + 1)], mode)
        if isinstance(phi, Eventually):
            lits = [self.lit(phi.arg, v, j, mode) for j in range(t, k + 1)]
            lits += [self.conj([self.loop_upto(j), self.lit(phi.arg, v, j, mode)], mode)
                     for j in range(1, t)]
            return self.disj(lits, mode)
        if isinstance(phi, Always):
            lits = [self.lit(phi.arg, v, j, mode) for j in range(t, k + 1)]
            lits += [self.disj([1.0 - self.loop_upto(j), self.lit(phi.arg, v, j, mode)], mode)
                     for j in range(1, t)]
            return self.conj(lits, mode)
        if isinstance(phi, AlwaysEventually):
            return self.disj([self.conj([self.loop_upto(j), self.lit(phi.arg, v, j, mode)], mode)
                              for j in range(1, k + 1)], mode)
        if isinstance(phi, EventuallyAlways):
            return self.conj([self.disj([1.0 - self.loop_upto(j), self.lit(phi.arg, v, j, mode)], mode)
                              for j in range(1, k + 1)], mode)
        if isinstance(phi, Until):
            return self._until_chain(phi, v, mode)[t]
        if isinstance(phi, ExistsN):
            hood = sorted(self.neighbors(v, phi.depth))
            K, N = len(hood), phi.count
            if K < N:
                return LinExpr(const=0.0)
            zs = LinExpr.total(self.lit(phi.arg, u, t, mode) for u in hood)
            y = self._binary("count")
            Y = LinExpr.var(y)
            if mode == POS:
                self._add("count", zs + K * (1.0 - Y), ">=", float(N))
            else:
                self._add("count", zs - K * Y, "<=", N - 1.0)
            return Y
        raise TypeError(f"not a formula: {phi!r}")


def encode_formula(graph: LabeledGraph, phi: Formula, nodes, horizon: int,
                   simplex: bool = False) -> ConstraintSystem:
    """Fresh system enforcing ``phi`` at ``nodes`` (an int is one node)."""
    if isinstance(nodes, (int, np.integer)):
        nodes = [int(nodes)]
    cs = ConstraintSystem(graph, horizon)
    if simplex:
        cs.add_simplex_rows()
    cs.enforce(phi, nodes)
    return cs


def encode_loop(graph: LabeledGraph, horizon: int) -> ConstraintSystem:
    """A system holding only the density variables and the loop encoding."""
    return ConstraintSystem(graph, horizon)

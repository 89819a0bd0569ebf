"""Satisfaction of GTL formulas on (lasso-shaped) graph trajectories.

A trajectory holds positions ``0..k`` and, when periodic with loop index
``l``, the successor of position ``k`` is ``l`` (so ``x(k)`` stands for
``x(l-1)``).  Every temporal operator then lives on a finite graph of
positions and is decided exactly.  Non-periodic trajectories use Kleene
three-valued logic; a verdict that depends on the unseen future raises
:class:`EvaluationError`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core.graph import InputError, LabeledGraph, neighbor_set
from .formula import (Always, AlwaysEventually, And, Atom, Const, Eventually,
                      EventuallyAlways, ExistsN, Formula, Next, Not, Or, Until,
                      temporal_depth)

PERIODIC_TOL = 1e-7
ATOM_TOL = 1e-7


class EvaluationError(ValueError):
    pass


class GraphTrajectory:
    """Densities ``x^s(0..k)`` on a labeled graph, optionally looping back."""

    def __init__(self, graph: LabeledGraph, densities: Sequence, loop: int | None = None,
                 periodic_tol: float = PERIODIC_TOL):
        xs = [np.asarray(d, dtype=float) for d in densities]
        if len(xs) != graph.m:
            raise InputError(f"expected {graph.m} sub-swarm trajectories, got {len(xs)}")
        T = xs[0].shape[0] - 1
        for s, x in enumerate(xs):
            if x.shape != (T + 1, graph.n_r):
                raise InputError(f"trajectory of sub-swarm {s} has shape {x.shape}")
        if loop is not None:
            if not 1 <= loop <= T:
                raise InputError(f"loop index {loop} outside 1..{T}")
            gap = max(float(np.max(np.abs(x[T] - x[loop - 1]))) for x in xs)
            if gap > periodic_tol:
                raise InputError(f"x({T}) differs from x({loop - 1}) by {gap:.3g}")
        self.graph = graph
        self.densities = xs
        self.horizon = T
        self.loop = loop
        # labels[t, i] = f_i(x(t))
        self.labels = np.array([[graph.label(i, [x[t] for x in xs]) for i in range(graph.n_r)]
                                for t in range(T + 1)])

    @property
    def periodic(self) -> bool:
        return self.loop is not None

    @property
    def period(self) -> int | None:
        return None if self.loop is None else self.horizon - self.loop + 1

    def succ(self, p: int) -> int | None:
        if p < self.horizon:
            return p + 1
        return self.loop

    def canonical(self, q: int) -> int:
        """Stored position that time ``q`` (possibly past the horizon) maps to."""
        if q <= self.horizon:
            return q
        if self.loop is None:
            raise EvaluationError(f"time {q} is past the end of a non-periodic trajectory")
        return self.loop + (q - self.horizon - 1) % self.period

    def loop_positions(self) -> range:
        return range(self.loop, self.horizon + 1)


def _not(v):
    return None if v is None else not v


def _and(vals):
    vals = list(vals)
    if any(v is False for v in vals):
        return False
    if any(v is None for v in vals):
        return None
    return True


def _or(vals):
    vals = list(vals)
    if any(v is True for v in vals):
        return True
    if any(v is None for v in vals):
        return None
    return False


class _Evaluator:
    def __init__(self, traj: GraphTrajectory, tol: float):
        self.traj = traj
        self.tol = tol
        self.memo: dict = {}
        self.hood: dict = {}

    def neighbors(self, v: int, depth: int) -> frozenset:
        key = (v, depth)
        if key not in self.hood:
            self.hood[key] = neighbor_set(self.traj.graph, [v], depth)
        return self.hood[key]

    def val(self, phi: Formula, v: int, p: int):
        key = (phi, v, p)
        memo = self.memo
        if key in memo:
            return memo[key]
        out = self._val(phi, v, p)
        memo[key] = out
        return out

    def _chain(self, p: int):
        """Positions visited from ``p`` until a repeat; flag whether it ends open."""
        seen, order, q = set(), [], p
        while q is not None and q not in seen:
            seen.add(q)
            order.append(q)
            q = self.traj.succ(q)
        return order, q is None

    def _until(self, a: Formula | None, b: Formula, v: int, p: int):
        order, open_end = self._chain(p)
        acc = None if open_end else False
        for q in reversed(order):
            bq = self.val(b, v, q)
            aq = True if a is None else self.val(a, v, q)
            acc = _or([bq, _and([aq, acc])])
        return acc

    def _val(self, phi: Formula, v: int, p: int):
        tr = self.traj
        if isinstance(phi, Const):
            return phi.value
        if isinstance(phi, Atom):
            return phi.holds(tr.labels[p, v], self.tol)
        if isinstance(phi, Not):
            return _not(self.val(phi.arg, v, p))
        if isinstance(phi, And):
            return _and([self.val(phi.left, v, p), self.val(phi.right, v, p)])
        if isinstance(phi, Or):
            return _or([self.val(phi.left, v, p), self.val(phi.right, v, p)])
        if isinstance(phi, Next):
            q = tr.succ(p)
            return None if q is None else self.val(phi.arg, v, q)
        if isinstance(phi, Until):
            return self._until(phi.left, phi.right, v, p)
        if isinstance(phi, Eventually):
            return self._until(None, phi.arg, v, p)
        if isinstance(phi, Always):
            return _not(self._until(None, Not(phi.arg), v, p))
        if isinstance(phi, (AlwaysEventually, EventuallyAlways)):
            if not tr.periodic:
                return None  # a finite prefix never settles an infinitely-often claim
            vals = [self.val(phi.arg, v, q) for q in tr.loop_positions()]
            return _or(vals) if isinstance(phi, AlwaysEventually) else _and(vals)
        if isinstance(phi, ExistsN):
            hood = self.neighbors(v, phi.depth)
            if len(hood) < phi.count:
                return False
            vals = [self.val(phi.arg, k, p) for k in sorted(hood)]
            yes = sum(x is True for x in vals)
            unknown = sum(x is None for x in vals)
            if yes >= phi.count:
                return True
            if yes + unknown < phi.count:
                return False
            return None
        raise TypeError(f"not a formula: {phi!r}")


def evaluate(traj: GraphTrajectory, node: int, t: int, phi: Formula,
             tol: float = ATOM_TOL) -> bool:
    """Whether ``phi`` holds at ``node`` at time ``t`` (``0 <= t <= horizon``)."""
    if not 0 <= t <= traj.horizon:
        raise InputError(f"time {t} outside 0..{traj.horizon}")
    if not 0 <= node < traj.graph.n_r:
        raise InputError(f"node {node} out of range")
    out = _Evaluator(traj, tol).val(phi, node, t)
    if out is None:
        raise EvaluationError("the verdict depends on behavior past the end of a "
                              "non-periodic trajectory")
    return out


def evaluate_all(traj: GraphTrajectory, nodes, phi: Formula, t: int = 0,
                 tol: float = ATOM_TOL) -> dict[int, bool]:
    ev = _Evaluator(traj, tol)
    out = {}
    for v in nodes:
        r = ev.val(phi, int(v), t)
        if r is None:
            raise EvaluationError("the verdict depends on behavior past the end of a "
                                  "non-periodic trajectory")
        out[int(v)] = r
    return out


def truth_table(traj: GraphTrajectory, phi: Formula, tol: float = ATOM_TOL) -> np.ndarray:
    """Verdicts for every (node, stored position); entries are True/False/None."""
    ev = _Evaluator(traj, tol)
    return np.array([[ev.val(phi, v, p) for p in range(traj.horizon + 1)]
                     for v in range(traj.graph.n_r)], dtype=object)


# an independent evaluator over the explicitly unrolled word -------------------

def unroll_bound(traj: GraphTrajectory, phi: Formula) -> int:
    """Unrolled length that resolves every obligation of ``phi``."""
    if not traj.periodic:
        return traj.horizon
    return traj.horizon + traj.period * (temporal_depth(phi) + 1)


def evaluate_unrolled(traj: GraphTrajectory, node: int, t: int, phi: Formula,
                      tol: float = ATOM_TOL) -> bool:
    """Evaluate on the unrolled periodic word ``0..bound``.

    Each temporal operator at time ``q`` inspects the window ``q..q+period``
    (or ``q..horizon`` without a loop); within the unroll bound that window
    always exists for the subformulas that are consulted.
    """
    if not traj.periodic:
        return evaluate(traj, node, t, phi, tol)
    bound = unroll_bound(traj, phi)
    per = traj.period
    memo: dict = {}

    def window(q: int) -> range:
        # every stored suffix is visited within one period past the horizon
        return range(q, max(q, traj.horizon) + per + 1)

    def val(f: Formula, v: int, q: int) -> bool:
        key = (f, v, q)
        if key in memo:
            return memo[key]
        if q > bound + per * (temporal_depth(phi) + 2):
            raise EvaluationError("unroll bound exceeded")
        p = traj.canonical(q)
        if isinstance(f, Const):
            r = f.value
        elif isinstance(f, Atom):
            r = f.holds(traj.labels[p, v], tol)
        elif isinstance(f, Not):
            r = not val(f.arg, v, q)
        elif isinstance(f, And):
            r = val(f.left, v, q) and val(f.right, v, q)
        elif isinstance(f, Or):
            r = val(f.left, v, q) or val(f.right, v, q)
        elif isinstance(f, Next):
            r = val(f.arg, v, q + 1)
        elif isinstance(f, (Until, Eventually, Always)):
            a = f.left if isinstance(f, Until) else None
            b = f.right if isinstance(f, Until) else f.arg
            if isinstance(f, Always):
                r = all(val(b, v, j) for j in window(q))
            else:
                r = False
                for j in window(q):
                    if val(b, v, j):
                        r = True
                        break
                    if a is not None and not val(a, v, j):
                        break
        elif isinstance(f, (AlwaysEventually, EventuallyAlways)):
            start = max(q, traj.horizon + 1)
            vals = [val(f.arg, v, j) for j in range(start, start + per)]
            r = any(vals) if isinstance(f, AlwaysEventually) else all(vals)
        elif isinstance(f, ExistsN):
            hood = neighbor_set(traj.graph, [v], f.depth)
            r = sum(val(f.arg, k, q) for k in hood) >= f.count
        else:
            raise TypeError(f"not a formula: {f!r}")
        memo[key] = r
        return r

    return val(phi, node, t)

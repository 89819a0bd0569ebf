"""Static prediction of the binary variables an encoding will create."""

from __future__ import annotations

from ..core.graph import LabeledGraph, neighbor_set
from ..gtl.formula import (Always, AlwaysEventually, And, Atom, Const, Eventually,
                           EventuallyAlways, ExistsN, Formula, Next, Not, Or, Until)
from .encoder import ENF, NEG, POS

_FLIP = {POS: NEG, NEG: POS}


class _Walk:
    def __init__(self, graph: LabeledGraph, horizon: int):
        self.graph = graph
        self.k = horizon
        self.seen: set = set()
        self.binaries = 0
        self.literal_sites = 0  # atom rows / counting nodes visited outside ENF

    def enf(self, phi: Formula, v: int, t: int) -> None:
        k = self.k
        if isinstance(phi, (Const, Atom)):
            return
        if isinstance(phi, And):
            self.enf(phi.left, v, t)
            self.enf(phi.right, v, t)
        elif isinstance(phi, Not) and isinstance(phi.arg, Not):
            self.enf(phi.arg.arg, v, t)
        elif isinstance(phi, Next):
            for j in ([t + 1] if t < k else range(1, k + 1)):
                self.enf(phi.arg, v, j)
        elif isinstance(phi, Always):
            for j in list(range(t, k + 1)) + list(range(1, t)):
                self.enf(phi.arg, v, j)
        elif isinstance(phi, EventuallyAlways):
            for j in range(1, k + 1):
                self.enf(phi.arg, v, j)
        elif isinstance(phi, Or):
            self.lit(phi.left, v, t, POS)
            self.lit(phi.right, v, t, POS)
        elif isinstance(phi, ExistsN):
            hood = neighbor_set(self.graph, [v], phi.depth)
            if len(hood) >= phi.count:
                for u in hood:
                    self.lit(phi.arg, u, t, POS)
        else:
            self.lit(phi, v, t, POS)

    def lit(self, phi: Formula, v: int, t: int, mode: str) -> None:
        k = self.k
        if isinstance(phi, (AlwaysEventually, EventuallyAlways)):
            t = -1
        key = (phi, v, t, mode)
        if key in self.seen:
            return
        self.seen.add(key)
        if isinstance(phi, Const):
            return
        if isinstance(phi, Atom):
            if phi.A:
                n = 1 if mode == POS else phi.rows
                self.binaries += n
                self.literal_sites += phi.rows
            return
        if isinstance(phi, Not):
            self.lit(phi.arg, v, t, _FLIP[mode])
        elif isinstance(phi, (And, Or)):
            self.lit(phi.left, v, t, mode)
            self.lit(phi.right, v, t, mode)
        elif isinstance(phi, Next):
            for j in ([t + 1] if t < k else range(1, k + 1)):
                self.lit(phi.arg, v, j, mode)
        elif isinstance(phi, (Eventually, Always)):
            for j in list(range(t, k + 1)) + list(range(1, t)):
                self.lit(phi.arg, v, j, mode)
        elif isinstance(phi, (AlwaysEventually, EventuallyAlways)):
            for j in range(1, k + 1):
                self.lit(phi.arg, v, j, mode)
        elif isinstance(phi, Until):
            for j in range(k + 1):
                self.lit(phi.left, v, j, mode)
                self.lit(phi.right, v, j, mode)
        elif isinstance(phi, ExistsN):
            hood = neighbor_set(self.graph, [v], phi.depth)
            if len(hood) >= phi.count:
                for u in hood:
                    self.lit(phi.arg, u, t, mode)
                self.binaries += 1
                self.literal_sites += 1


def predict_binaries(graph: LabeledGraph, phi: Formula, nodes, horizon: int) -> int:
    """Number of binaries ``encode_formula`` creates, loop binaries included."""
    w = _Walk(graph, horizon)
    for v in nodes:
        w.enf(phi, int(v), 0)
    return horizon + w.binaries


def binary_budget(graph: LabeledGraph, phi: Formula, nodes, horizon: int) -> int:
    """Upper bound ``k + sites * (k + 1)``.

    ``sites`` counts the node-expanded occurrences that can need binaries:
    every row of an atom and every counting operator met outside enforced
    context, Next and Until nodes included for completeness.
    """
    sites = 0
    for v in nodes:
        for phi_v, u in _expand(graph, phi, int(v)):
            if isinstance(phi_v, Atom):
                sites += phi_v.rows
            elif isinstance(phi_v, (ExistsN, Next, Until)):
                sites += 1
    return horizon + sites * (horizon + 1)


def _expand(graph: LabeledGraph, phi: Formula, v: int):
    """Occurrences of subformulas paired with the node they are evaluated at."""
    yield phi, v
    if isinstance(phi, ExistsN):
        for u in sorted(neighbor_set(graph, [v], phi.depth)):
            yield from _expand(graph, phi.arg, u)
    else:
        for c in phi.children():
            yield from _expand(graph, c, v)

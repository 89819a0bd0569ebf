"""Bins, adjacency and affine node labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Invalid user-supplied data (shapes, indices, tolerances)."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AffineLabel:
    """Node label ``f(x^1..x^m) = sum_s coeffs[s] @ x^s + offset``.

    ``coeffs[s]`` has shape ``(d, n_r)``; ``offset`` has shape ``(d,)``.
    """

    coeffs: tuple
    offset: np.ndarray

    def __init__(self, coeffs: Sequence, offset=None):
        cs = tuple(_frozen(np.atleast_2d(c)) for c in coeffs)
        if not cs:
            raise InputError("a label needs at least one sub-swarm coefficient block")
        d = cs[0].shape[0]
        if any(c.shape != cs[0].shape for c in cs):
            raise InputError("label coefficient blocks must share one shape")
        off = np.zeros(d) if offset is None else np.asarray(offset, dtype=float).reshape(-1)
        if off.shape != (d,):
            raise InputError(f"label offset has length {off.size}, expected {d}")
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "offset", _frozen(off))

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def n_r(self) -> int:
        return self.coeffs[0].shape[1]

    @property
    def m(self) -> int:
        return len(self.coeffs)

    def __call__(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        out = self.offset.copy()
        for c, x in zip(self.coeffs, xs):
            out += c @ np.asarray(x, dtype=float)
        return out

    def stacked(self) -> np.ndarray:
        """Coefficients as one ``(d, m*n_r)`` matrix over ``[x^1; ...; x^m]``."""
        return np.hstack(self.coeffs)


def density_labels(n_r: int, m: int) -> list[AffineLabel]:
    """Labels where node i reports the densities ``[x^1_i, ..., x^m_i]``."""
    labels = []
    for i in range(n_r):
        cs = []
        for s in range(m):
            c = np.zeros((m, n_r))
            c[s, i] = 1.0
            cs.append(c)
        labels.append(AffineLabel(cs))
    return labels


class LabeledGraph:
    """Graph of bins shared by ``m`` sub-swarms with per-node affine labels.

    ``adjacency[s][i, j] == 1`` means agents of sub-swarm ``s`` may move from
    bin ``i`` to bin ``j``.
    """

    def __init__(self, adjacency: Sequence, labels: Sequence[AffineLabel] | None = None,
                 names: Sequence[str] | None = None):
        adj = []
        for s, a in enumerate(adjacency):
            a = np.asarray(a)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise InputError(f"adjacency of sub-swarm {s} must be square, got {a.shape}")
            if not np.all((a == 0) | (a == 1)):
                raise InputError(f"adjacency of sub-swarm {s} must be 0/1")
            a = a.astype(np.int8)
            dead = np.flatnonzero(a.sum(axis=1) == 0)
            if len(dead):
                raise InputError(f"sub-swarm {s}: node {int(dead[0])} has no outgoing edge")
            a.setflags(write=False)
            adj.append(a)
        if not adj:
            raise InputError("at least one sub-swarm is required")
        n = adj[0].shape[0]
        if any(a.shape != (n, n) for a in adj):
            raise InputError("all sub-swarm adjacencies must have the same size")
        if labels is None:
            labels = density_labels(n, len(adj))
        labels = list(labels)
        if len(labels) != n:
            raise InputError(f"expected {n} labels, got {len(labels)}")
        d = labels[0].dim
        for i, f in enumerate(labels):
            if f.dim != d:
                raise InputError(f"label of node {i} has dimension {f.dim}, expected {d}")
            if f.m != len(adj) or f.n_r != n:
                raise InputError(f"label of node {i} does not match {len(adj)} sub-swarms x {n} bins")
        self.adjacency: tuple[np.ndarray, ...] = tuple(adj)
        self.labels: tuple[AffineLabel, ...] = tuple(labels)
        self.names = tuple(names) if names is not None else tuple(f"v{i + 1}" for i in range(n))
        if len(self.names) != n or len(set(self.names)) != n:
            raise InputError("node names must be unique, one per node")
        union = np.zeros((n, n), dtype=np.int8)
        for a in adj:
            union |= a
        union.setflags(write=False)
        self.union = union

    @property
    def n_r(self) -> int:
        return self.adjacency[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.adjacency)

    @property
    def d(self) -> int:
        return self.labels[0].dim

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [tuple(e) for e in np.argwhere(self.union).tolist()]

    def support(self, s: int) -> np.ndarray:
        """Allowed nonzero pattern of ``M^s``: ``M_ij`` may be nonzero iff edge j -> i."""
        return self.adjacency[s].T.astype(bool)

    def label(self, i: int, xs: Sequence[np.ndarray]) -> np.ndarray:
        return self.labels[i](xs)

    def node_index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            i = int(name_or_index)
            if not 0 <= i < self.n_r:
                raise InputError(f"node index {i} out of range")
            return i
        try:
            return self.names.index(name_or_index)
        except ValueError:
            raise InputError(f"unknown node {name_or_index!r}") from None


def neighbor_set(graph: LabeledGraph, nodes: Iterable[int], depth: int = 1) -> frozenset[int]:
    """Apply the one-step neighbor operator ``depth`` times over the edge union."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    cur = set()
    for v in nodes:
        if not 0 <= int(v) < graph.n_r:
            raise InputError(f"node index {v} out of range")
        cur.add(int(v))
    for _ in range(depth):
        if not cur:
            break
        cur = set(np.flatnonzero(graph.union[sorted(cur)].any(axis=0)).tolist())
    return frozenset(cur)


def is_scrambling(adjacency) -> bool:
    """True iff every pair of rows shares a column where both are 1."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"scrambling test needs a square matrix, got shape {a.shape}")
    b = (a != 0).astype(np.int64)
    overlap = b @ b.T
    return bool(np.all(overlap > 0))


def is_complete(adjacency) -> bool:
    return bool(np.all(np.asarray(adjacency) != 0))


def is_strongly_connected(adjacency) -> bool:
    a = np.asarray(adjacency) != 0
    n = a.shape[0]

    def reach(mat):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = seen.copy()
        while frontier.any():
            nxt = mat[frontier].any(axis=0) & ~seen
            seen |= nxt
            frontier = nxt
        return seen.all()

    return bool(reach(a) and reach(a.T))


def ring_adjacency(n: int, self_loops: bool = True, directed: bool = False) -> np.ndarray:
    """Cycle on ``n`` nodes; ``directed`` keeps only the i -> i+1 edges."""
    a = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        a[i, (i + 1) % n] = 1
        if not directed:
            a[i, (i - 1) % n] = 1
        if self_loops:
            a[i, i] = 1
    return a

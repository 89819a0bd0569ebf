"""Gridworld instances: 4-neighbor grids with obstacles, capacities and targets."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..core.graph import InputError, LabeledGraph
from ..gtl.formula import Always, EventuallyAlways, compare
from ..synthesis.problem import Cost, SynthesisProblem


def grid_adjacency(rows: int, cols: int, obstacles: Iterable[int] = (),
                   knockout: bool = False) -> np.ndarray:
    """Moves to the four neighbors or staying put; cell ``r * cols + c``.

    With ``knockout`` no edge enters an obstacle cell (its self-loop stays so
    the matrix column is still defined).
    """
    if rows < 1 or cols < 1:
        raise InputError("grid needs at least one row and one column")
    n = rows * cols
    blocked = set(int(o) for o in obstacles)
    if any(not 0 <= o < n for o in blocked):
        raise InputError("obstacle cell outside the grid")
    a = np.zeros((n, n), dtype=np.int8)
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            a[i, i] = 1
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    j = rr * cols + cc
                    if knockout and j in blocked:
                        continue
                    a[i, j] = 1
    return a


def cell_names(rows: int, cols: int) -> list[str]:
    return [f"c{i}" for i in range(rows * cols)]


def gridworld_problem(rows: int = 5, cols: int = 7, starts=(0, 6, 24, 30),
                      targets=(16, 17, 23, 28), obstacles=(9, 11, 19, 26),
                      target_min: float = 0.2, relaxed_cap: float = 0.25, cap: float = 0.15,
                      horizon: int = 10, knockout: bool = False,
                      loop_cost: bool = True) -> SynthesisProblem:
    """Homogeneous swarm: reach and stay at the targets, avoid obstacles, respect
    per-cell capacities (looser at start and target cells)."""
    n = rows * cols
    graph = LabeledGraph([grid_adjacency(rows, cols, obstacles, knockout)],
                         names=cell_names(rows, cols))
    x0 = np.zeros(n)
    x0[list(starts)] = 1.0 / len(starts)
    relaxed = sorted(set(starts) | set(targets))
    others = [i for i in range(n) if i not in relaxed and i not in set(obstacles)]
    specs = [(EventuallyAlways(compare(">=", (target_min,))), list(targets))]
    if obstacles:
        specs.append((Always(compare("=", (0.0,))), list(obstacles)))
    specs.append((Always(compare("<=", (relaxed_cap,))), relaxed))
    if others:
        specs.append((Always(compare("<=", (cap,))), others))
    return SynthesisProblem(graph, [x0], specs, horizon, Cost(loop=loop_cost), name="gridworld")


__all__ = ["grid_adjacency", "cell_names", "gridworld_problem"]

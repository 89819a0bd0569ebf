"""Exhaustive search for satisfying trajectories on a discretized simplex.

Dynamics are ignored: any sequence of grid densities counts, mirroring the
question the encoder answers when only trajectories are constrained.  This
is a test oracle, so the instance size is capped.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..core.graph import InputError, LabeledGraph
from .formula import Formula
from .monitor import GraphTrajectory, evaluate_all

MAX_NODES = 4
MAX_HORIZON = 5
MAX_RESOLUTION = 5
MAX_CANDIDATES = 2_000_000


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All points of the unit simplex in R^n with coordinates in steps of 1/resolution."""
    pts = []
    for bars in itertools.combinations(range(resolution + n - 1), n - 1):
        prev, parts = -1, []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(resolution + n - 2 - prev)
        pts.append(parts)
    return np.array(pts, dtype=float) / resolution


def brute_force_satisfiable(graph: LabeledGraph, phi: Formula, nodes, horizon: int,
                            resolution: int, x0=None):
    """Search grid lassos ``x(0..horizon)`` satisfying ``phi`` at every node in ``nodes``.

    ``x0`` pins the initial densities (one vector per sub-swarm); otherwise
    ``x(0)`` is searched as well.  Returns ``(found, witness)``.
    """
    if graph.n_r > MAX_NODES or horizon > MAX_HORIZON or resolution > MAX_RESOLUTION:
        raise InputError(f"brute force limited to n_r <= {MAX_NODES}, horizon <= "
                         f"{MAX_HORIZON}, resolution <= {MAX_RESOLUTION}")
    if horizon < 1 or resolution < 1:
        raise InputError("horizon and resolution must be positive")
    grid = simplex_grid(graph.n_r, resolution)
    states = list(itertools.product(range(len(grid)), repeat=graph.m))
    free = horizon - 1 + (0 if x0 is not None else 1)
    count = len(states) ** free * horizon
    if count > MAX_CANDIDATES:
        raise InputError(f"brute force would visit {count} candidates (cap {MAX_CANDIDATES})")
    nodes = [int(v) for v in nodes]
    fixed0 = None if x0 is None else [np.asarray(x, dtype=float) for x in x0]
    for combo in itertools.product(states, repeat=free):
        seq = [[grid[i] for i in st] for st in combo]
        if fixed0 is not None:
            seq = [fixed0] + seq
        for loop in range(1, horizon + 1):
            full = seq + [seq[loop - 1]]
            dens = [np.array([full[t][s] for t in range(horizon + 1)]) for s in range(graph.m)]
            traj = GraphTrajectory(graph, dens, loop)
            verdicts = evaluate_all(traj, nodes, phi)
            if all(verdicts.values()):
                return True, traj
    return False, None

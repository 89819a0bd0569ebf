"""Best-first branch-and-bound over LP relaxations.

Branching picks the most fractional binary (ties to the lowest index) and
nodes are explored in order of their relaxation bound.  Each child starts
its simplex from the optimal basis of its parent.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from typing import Callable

import numpy as np

from .model import (FEAS_TOL, INFEASIBLE, INT_TOL, ITERATION_LIMIT, OPTIMAL,
                    TIME_LIMIT, UNBOUNDED, Model, Solution)
from . import simplex


def _default_relax(model: Model) -> Callable:
    lp = simplex.BoundedLP(model)

    def relax(lb, ub, time_limit, warm=None):
        return lp.solve(lb, ub, warm=warm, time_limit=time_limit)
    return relax


def most_fractional(x: np.ndarray, binaries: np.ndarray, tol: float = INT_TOL) -> int | None:
    """Index of the most fractional binary, lowest index on ties; None if integral."""
    xb = x[binaries]
    frac = np.abs(xb - np.round(xb))
    if not len(frac) or frac.max() <= tol:
        return None
    dist = np.abs(xb - 0.5)
    best = dist.min()
    k = int(np.flatnonzero(dist <= best + 1e-12)[0])
    return int(binaries[k])


def solve_milp(model: Model, time_limit: float | None = None, gap: float = 1e-6,
               tol: float = FEAS_TOL, node_limit: int = 200_000,
               relax: Callable | None = None) -> Solution:
    """``relax(lb, ub, time_limit, warm)`` returns (solution, basis)."""
    relax = relax or _default_relax(model)
    start = time.monotonic()
    sign = 1.0 if model.sense == "min" else -1.0
    binaries = np.flatnonzero(np.array(model.binary, dtype=bool))
    lb0, ub0 = model.bounds()

    def remaining():
        if time_limit is None:
            return None
        return max(time_limit - (time.monotonic() - start), 0.0)

    root, basis = relax(lb0, ub0, remaining())
    if root.status == INFEASIBLE:
        return Solution(INFEASIBLE, nodes=1)
    if root.status == UNBOUNDED:
        return Solution(UNBOUNDED, nodes=1)
    if root.status != OPTIMAL:
        return Solution(root.status, nodes=1)

    counter = itertools.count()
    heap = [(sign * root.objective, next(counter), lb0, ub0, root, basis)]
    best_x, best_obj = None, math.inf  # best_obj in minimization sign
    incumbents: list[tuple[float, float]] = []
    nodes = 0
    status = OPTIMAL

    def cutoff() -> float:
        if math.isinf(best_obj):
            return math.inf
        return best_obj - gap * max(1.0, abs(best_obj))

    while heap:
        bound, _, lb, ub, sol, basis = heapq.heappop(heap)
        if bound >= cutoff():
            continue
        nodes += 1
        if nodes > node_limit:
            heapq.heappush(heap, (bound, next(counter), lb, ub, sol, basis))
            status = ITERATION_LIMIT
            break
        if remaining() == 0.0:
            heapq.heappush(heap, (bound, next(counter), lb, ub, sol, basis))
            status = TIME_LIMIT
            break
        k = most_fractional(sol.x, binaries)
        if k is None:
            best_obj = bound
            best_x = sol.x.copy()
            best_x[binaries] = np.round(best_x[binaries])
            incumbents.append((time.monotonic() - start, sign * best_obj))
            continue
        for v in (0.0, 1.0) if sol.x[k] < 0.5 else (1.0, 0.0):
            clb, cub = lb.copy(), ub.copy()
            clb[k] = cub[k] = v
            child, cbasis = relax(clb, cub, remaining(), basis)
            if child.status == OPTIMAL:
                cb = sign * child.objective
                if cb < cutoff():
                    heapq.heappush(heap, (cb, next(counter), clb, cub, child, cbasis))
            elif child.status in (TIME_LIMIT, ITERATION_LIMIT):
                # unexplored subtree: keep its parent bound open
                heapq.heappush(heap, (bound, next(counter), clb, cub, sol, basis))
                status = child.status
        if status != OPTIMAL:
            break

    open_bound = min((h[0] for h in heap), default=math.inf)
    final_bound = min(open_bound, best_obj)
    if best_x is None:
        if status == OPTIMAL:
            return Solution(INFEASIBLE, nodes=nodes)
        return Solution(status, nodes=nodes,
                        bound=None if math.isinf(open_bound) else sign * open_bound)
    return Solution(status, x=best_x, objective=model.objective_value(best_x),
                    bound=sign * final_bound, nodes=nodes, incumbents=incumbents)

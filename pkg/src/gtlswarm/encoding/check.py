"""Decide a formula on a fixed trajectory by solving the pinned encoding."""

from __future__ import annotations

from ..gtl.formula import Formula
from ..gtl.monitor import GraphTrajectory
from ..opt import OPTIMAL, INFEASIBLE, SolverConfig, solve_milp
from .encoder import ConstraintSystem


class SolverVerdictError(RuntimeError):
    pass


def pinned_encoding(traj: GraphTrajectory, phi: Formula, nodes,
                    fix_loop: bool = False) -> ConstraintSystem:
    cs = ConstraintSystem(traj.graph, traj.horizon)
    cs.enforce(phi, nodes)
    for s, xs in enumerate(traj.densities):
        for t in range(traj.horizon + 1):
            for i in range(traj.graph.n_r):
                cs.model.fix(int(cs.x[s][t][i]), float(xs[t, i]))
    if fix_loop and traj.loop is not None:
        for j, var in enumerate(cs.loop, start=1):
            cs.model.fix(var, 1.0 if j == traj.loop else 0.0)
    return cs


def encoder_verdict(traj: GraphTrajectory, phi: Formula, nodes, fix_loop: bool = False,
                    config: SolverConfig | None = None) -> bool:
    """True iff the encoding is feasible with every density pinned to ``traj``."""
    cs = pinned_encoding(traj, phi, nodes, fix_loop)
    sol = solve_milp(cs.model, config)
    if sol.status == OPTIMAL:
        return True
    if sol.status == INFEASIBLE:
        return False
    raise SolverVerdictError(f"solver returned {sol.status}: {sol.message}")

"""Complete graphs: the density-only MILP and rank-one matrix extraction."""

from __future__ import annotations

import time

import numpy as np

from ..core.graph import InputError, is_complete
from ..core.plan import MarkovPlan
from ..gtl.monitor import GraphTrajectory, evaluate_all
from ..opt import OPTIMAL, TIME_LIMIT, SolverConfig, solve_milp
from .builder import PlanModel, bilinear_error
from .problem import (INFEASIBLE, SUCCESS, TIMEOUT, SolverDiagnostics, SynthesisProblem,
                      SynthesisResult)

PATH = "complete-milp"


def monitor_verdict(problem: SynthesisProblem, plan: MarkovPlan) -> bool:
    traj = GraphTrajectory(problem.graph, plan.densities, plan.loop)
    return all(all(evaluate_all(traj, nodes, phi).values()) for phi, nodes in problem.specs)


def extract_rank_one(densities: list[np.ndarray]) -> list[list[np.ndarray]]:
    """``M_ij(t) = x_i(t+1)`` for every column ``j``."""
    out = []
    for x in densities:
        n = x.shape[1]
        out.append([np.repeat(x[t + 1][:, None], n, axis=1) for t in range(x.shape[0] - 1)])
    return out


def synthesize_complete_graph(problem: SynthesisProblem, config: SolverConfig | None = None,
                              time_limit: float | None = None) -> SynthesisResult:
    g = problem.graph
    for s in range(g.m):
        if not is_complete(g.adjacency[s]):
            raise InputError(f"sub-swarm {s} graph is not complete; use the general path")
    t0 = time.perf_counter()
    pm = PlanModel(problem, "complete")
    pm.model.set_objective(pm.cost_expr(matrices=False))
    sol = solve_milp(pm.model, config, time_limit=time_limit)
    diag = SolverDiagnostics(wall_time=time.perf_counter() - t0)
    if not sol.has_point:
        status = TIMEOUT if sol.status == TIME_LIMIT else INFEASIBLE
        return SynthesisResult(status, PATH, diagnostics=diag, message=sol.message)
    dens, loop = pm.densities(sol.x)
    plan = MarkovPlan(tuple(tuple(m) for m in extract_rank_one(dens)), tuple(dens),
                      problem.horizon, loop, meta={"path": PATH})
    diag.eps_bil = bilinear_error(plan)
    verdict = monitor_verdict(problem, plan)
    status = SUCCESS if sol.status == OPTIMAL and verdict else (
        TIMEOUT if sol.status == TIME_LIMIT else INFEASIBLE)
    return SynthesisResult(status, PATH, plan, diag, verdict, sol.objective)

"""Monte-Carlo execution of a plan and checks on the empirical trajectory."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core.graph import InputError
from ..core.plan import MarkovPlan
from ..gtl.monitor import EvaluationError, GraphTrajectory, evaluate_all
from ..synthesis.problem import SynthesisProblem
from ..synthesis.reach_avoid import safety_polytope
from .population import AgentPopulation, step_agents, uniform_draws

AGENT_RECORD_LIMIT = 100_000
TRACE_HEADER = ("t", "sub_swarm", "bin", "planned_density", "empirical_density")


def quantization_slack(agents: Sequence[int]) -> float:
    inv = max(1.0 / n for n in agents)
    return inv + 3.0 * math.sqrt(inv)


@dataclass
class SimulationTrace:
    empirical: list          # per sub-swarm, (T+1, n_r)
    planned: list            # per sub-swarm, (T+1, n_r)
    deviation: np.ndarray    # max_s ||empirical - planned||_inf per step
    agents: list | None = None
    slack: float = 0.0
    verdict: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.empirical[0].shape[0] - 1

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t in range(self.horizon + 1):
            for s in range(len(self.empirical)):
                for i in range(self.empirical[s].shape[1]):
                    w.writerow((t, s, i, repr(float(self.planned[s][t, i])),
                                repr(float(self.empirical[s][t, i]))))
        return buf.getvalue()


def _verdict(problem: SynthesisProblem, plan: MarkovPlan, emp: list, slack: float):
    if plan.loop is not None:
        T = plan.horizon
        traj = GraphTrajectory(problem.graph, [e[:T + 1] for e in emp], plan.loop,
                               periodic_tol=math.inf)
    else:
        traj = GraphTrajectory(problem.graph, emp)
    try:
        return all(all(evaluate_all(traj, nodes, phi, tol=slack).values())
                   for phi, nodes in problem.specs), None
    except EvaluationError:
        pass
    if problem.reach_avoid is None:
        return None, "verdict depends on behavior past the simulated horizon"
    A, b = safety_polytope(problem)
    ok = all(np.max(A @ np.concatenate([e[t] for e in emp]) - b, initial=-1.0) <= slack
             for t in range(emp[0].shape[0]))
    return ok, "safety rows checked along the simulated horizon"


def run_simulation(problem: SynthesisProblem, plan: MarkovPlan, agents: Sequence[int],
                   seed: int = 0, horizon: int | None = None, slack: float | None = None,
                   record_agents: bool = False) -> SimulationTrace:
    g = problem.graph
    if len(agents) != g.m:
        raise InputError(f"expected {g.m} agent counts, got {len(agents)}")
    T = plan.horizon if horizon is None else int(horizon)
    if T < 1:
        raise InputError("simulation horizon must be >= 1")
    if plan.loop is None and not plan.time_invariant and T > plan.horizon:
        raise InputError("a non-periodic plan cannot run past its horizon")
    pop = AgentPopulation.place(problem.x0, agents)
    emp = [np.zeros((T + 1, g.n_r)) for _ in range(g.m)]
    planned = [np.array([plan.density(s, t) for t in range(T + 1)]) for s in range(g.m)]
    keep = record_agents and sum(pop.sizes) <= AGENT_RECORD_LIMIT
    history = [[b.copy() for b in pop.bins]] if keep else None
    for s in range(g.m):
        emp[s][0] = pop.density(s)
    for t in range(T):
        for s in range(g.m):
            M = plan.matrix(s, t)
            before = pop.bins[s]
            after = step_agents(before, M, uniform_draws(seed, s, t, len(before)))
            if not np.all(g.adjacency[s][before, after]):
                raise AssertionError("an agent crossed a missing edge")
            pop.bins[s] = after
            emp[s][t + 1] = pop.density(s)
        if keep:
            history.append([b.copy() for b in pop.bins])
    dev = np.array([max(float(np.max(np.abs(emp[s][t] - planned[s][t]))) for s in range(g.m))
                    for t in range(T + 1)])
    q = quantization_slack(agents) if slack is None else float(slack)
    trace = SimulationTrace(emp, planned, dev, history, q)
    trace.verdict, note = _verdict(problem, plan, emp, q)
    if note:
        trace.notes.append(note)
    return trace

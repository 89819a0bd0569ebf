"""General graphs: trust-region sequential MILP on the bilinear dynamics.

The start comes from a McCormick relaxation of ``V_ij = M_ij x_j``; each
iteration then solves the encoding with the dynamics linearized around the
current pair ``(x^k, M^k)``, a penalized slack and a trust region on the
densities, and re-fits matrices to the new densities by an L1 LP.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..core.graph import LabeledGraph
from ..core.plan import MarkovPlan, clean_stochastic
from ..opt import TIME_LIMIT, LinExpr, SolverConfig, solve_lp, solve_milp
from ..opt.model import INF, Model
from .builder import PlanModel, bilinear_error
from .complete import monitor_verdict
from .problem import (INACCURATE, INFEASIBLE, SUCCESS, TIMEOUT, SolverDiagnostics,
                      SynthesisProblem, SynthesisResult, TrustRegionParams)

PATH = "general"


class Infeasible(Exception):
    pass


@dataclass
class Iterate:
    densities: list
    loop: int
    matrices: list
    accuracy: float
    cost: float

    def plan(self, horizon: int) -> MarkovPlan:
        return MarkovPlan(tuple(tuple(m) for m in self.matrices), tuple(self.densities),
                          horizon, self.loop, meta={"path": PATH})


# matrix recovery ------------------------------------------------------------------

def _fit_step(sup: np.ndarray, x: np.ndarray, y: np.ndarray,
              config: SolverConfig | None) -> np.ndarray:
    """Column-stochastic ``M`` on ``sup`` minimizing ``||y - M x||_1``, then the
    least off-diagonal mass among the minimizers."""
    n = len(x)
    mdl = Model("fit")
    mv = {(int(i), int(j)): mdl.add_var(f"M_{i}_{j}", 0.0, 1.0) for i, j in zip(*np.nonzero(sup))}
    slack = LinExpr()
    for i in range(n):
        p = mdl.add_var(f"p{i}", 0.0, INF)
        q = mdl.add_var(f"q{i}", 0.0, INF)
        row = LinExpr({v: float(x[j]) for (ii, j), v in mv.items() if ii == i and x[j]})
        row.iadd(LinExpr({p: 1.0, q: -1.0}))
        mdl.add_constr(row, "==", float(y[i]))
        slack.iadd(LinExpr({p: 1.0, q: 1.0}))
    for j in range(n):
        mdl.add_constr(LinExpr({v: 1.0 for (i, jj), v in mv.items() if jj == j}), "==", 1.0)
    mdl.set_objective(slack)
    sol = solve_lp(mdl, config)
    if not sol.has_point:
        raise RuntimeError(f"matrix fit failed: {sol.status} {sol.message}")
    best = max(sol.objective, 0.0)
    mdl.add_constr(slack, "<=", best + 1e-10 + 1e-9 * best)
    mdl.set_objective(LinExpr({v: 1.0 for (i, j), v in mv.items() if i != j}))
    sol2 = solve_lp(mdl, config)
    xs = sol2.x if sol2.has_point else sol.x
    M = np.zeros((n, n))
    for (i, j), v in mv.items():
        M[i, j] = xs[v]
    M, _ = clean_stochastic(M, sup)
    return M


def recover_markov(graph: LabeledGraph, densities, config: SolverConfig | None = None
                   ) -> tuple[list[list[np.ndarray]], float]:
    """Best-fit matrices along a density trajectory and the L1 residual."""
    mats, resid = [], 0.0
    for s, x in enumerate(densities):
        x = np.asarray(x, dtype=float)
        sup = graph.support(s)
        seq = []
        for t in range(x.shape[0] - 1):
            M = _fit_step(sup, x[t], x[t + 1], config)
            resid += float(np.abs(x[t + 1] - M @ x[t]).sum())
            seq.append(M)
        mats.append(seq)
    return mats, resid


# McCormick start ------------------------------------------------------------------

def _matrix_model(problem: SynthesisProblem, name: str) -> PlanModel:
    pm = PlanModel(problem, name)
    pm.add_matrices()
    return pm


def mccormick_model(problem: SynthesisProblem) -> PlanModel:
    """Relaxed MILP with ``x(t+1) = V(t) 1`` and McCormick envelopes on ``V``.

    At ``t = 0`` the densities are data, so ``V(0) = M(0) diag(x(0))`` is
    imposed exactly.  The valid identity ``1^T V(t) = x(t)^T`` (columns of
    ``M`` sum to one) is added as well.
    """
    pm = _matrix_model(problem, "mccormick")
    g, mdl = pm.graph, pm.model
    for s in range(g.m):
        x0 = problem.x0[s]
        for t in range(pm.k):
            mt = pm.M[s][t]
            flows: dict[int, LinExpr] = {i: LinExpr() for i in range(g.n_r)}
            outflow: dict[int, LinExpr] = {j: LinExpr() for j in range(g.n_r)}
            for (i, j), mv in mt.items():
                if t == 0:
                    if x0[j]:
                        flows[i].iadd(LinExpr.var(mv, float(x0[j])))
                    continue
                v = mdl.add_var(f"V_s{s}_t{t}_{i}_{j}", 0.0, 1.0)
                xj = pm.xvar(s, t, j)
                mdl.add_constr(LinExpr({v: 1.0, mv: -1.0, xj: -1.0}), ">=", -1.0)
                mdl.add_constr(LinExpr({v: 1.0, xj: -1.0}), "<=", 0.0)
                mdl.add_constr(LinExpr({v: 1.0, mv: -1.0}), "<=", 0.0)
                flows[i].iadd(LinExpr.var(v))
                outflow[j].iadd(LinExpr.var(v))
            for i in range(g.n_r):
                mdl.add_constr(LinExpr.var(pm.xvar(s, t + 1, i)) - flows[i], "==", 0.0)
            if t > 0:
                for j in range(g.n_r):
                    mdl.add_constr(outflow[j] - LinExpr.var(pm.xvar(s, t, j)), "==", 0.0)
    mdl.set_objective(pm.cost_expr())
    return pm


def mccormick_initialize(problem: SynthesisProblem, config: SolverConfig | None = None,
                         time_limit: float | None = None):
    """Densities, loop index and objective of the relaxed MILP optimum."""
    pm = mccormick_model(problem)
    sol = solve_milp(pm.model, config, time_limit=time_limit)
    if sol.status == TIME_LIMIT and not sol.has_point:
        raise TimeoutError("time limit reached in the McCormick stage")
    if not sol.has_point:
        raise Infeasible(f"McCormick relaxation is {sol.status}")
    dens, loop = pm.densities(sol.x)
    return dens, loop, float(sol.objective)


# linearized subproblem --------------------------------------------------------------

class _Linearized:
    """Encoded base model; each call adds one linearization and trust region."""

    def __init__(self, problem: SynthesisProblem, params: TrustRegionParams):
        self.problem, self.params = problem, params
        self.pm = _matrix_model(problem, "linearized")
        self.base = self.pm.model
        self.cost = self.pm.cost_expr()

    def build(self, it: Iterate, radius: float) -> Model:
        pm, prm = self.pm, self.params
        g, k = pm.graph, pm.k
        mdl = self.base.copy()
        penalty = LinExpr()
        for s in range(g.m):
            xk, Mk = it.densities[s], it.matrices[s]
            for t in range(k):
                zs = []
                for i in range(g.n_r):
                    z = mdl.add_var(f"z_s{s}_t{t}_{i}", -INF, INF)
                    zs.append(z)
                    e = LinExpr({pm.xvar(s, t + 1, i): 1.0, z: -1.0})
                    for j in range(g.n_r):
                        if Mk[t][i, j]:
                            e.iadd(LinExpr.var(pm.xvar(s, t, j)), -float(Mk[t][i, j]))
                    for (ii, j), mv in pm.M[s][t].items():
                        if ii == i and xk[t][j]:
                            e.iadd(LinExpr.var(mv), -float(xk[t][j]))
                    mdl.add_constr(e, "==", -float(Mk[t][i] @ xk[t]))
                penalty.iadd(_norm(mdl, [LinExpr.var(z) for z in zs], prm.norm,
                                   f"zn_s{s}_t{t}"))
            for t in range(1, k + 1):
                if prm.norm == "inf":
                    for i in range(g.n_r):
                        v = pm.xvar(s, t, i)
                        mdl.lb[v] = max(mdl.lb[v], xk[t][i] - radius)
                        mdl.ub[v] = min(mdl.ub[v], xk[t][i] + radius)
                else:
                    dev = [LinExpr.var(pm.xvar(s, t, i)) - float(xk[t][i]) for i in range(g.n_r)]
                    mdl.add_constr(_norm(mdl, dev, "1", f"tr_s{s}_t{t}"), "<=", radius)
        obj = self.cost.copy()
        obj.iadd(penalty, prm.lam)
        mdl.set_objective(obj)
        return mdl

    def solve(self, it: Iterate, radius: float, config, time_limit):
        return self.pm, solve_milp(self.build(it, radius), config, time_limit=time_limit)


def _norm(mdl: Model, exprs: list[LinExpr], norm: str, tag: str) -> LinExpr:
    """Epigraph expression of the inf- or 1-norm of ``exprs``."""
    if norm == "inf":
        e = mdl.add_var(tag, 0.0, INF)
        for x in exprs:
            mdl.add_constr(LinExpr.var(e) - x, ">=", 0.0)
            mdl.add_constr(LinExpr.var(e) + x, ">=", 0.0)
        return LinExpr.var(e)
    out = LinExpr()
    for n, x in enumerate(exprs):
        a = mdl.add_var(f"{tag}_{n}", 0.0, INF)
        mdl.add_constr(LinExpr.var(a) - x, ">=", 0.0)
        mdl.add_constr(LinExpr.var(a) + x, ">=", 0.0)
        out.iadd(LinExpr.var(a))
    return out


def initial_iterate(problem: SynthesisProblem, config: SolverConfig | None = None,
                    time_limit: float | None = None) -> Iterate:
    dens, loop, cost0 = mccormick_initialize(problem, config, time_limit)
    mats, f0 = recover_markov(problem.graph, dens, config)
    return Iterate(dens, loop, mats, f0, cost0)


def linearized_model(problem: SynthesisProblem, params: TrustRegionParams | None = None,
                     config: SolverConfig | None = None) -> Model:
    """First trust-region subproblem, linearized at the McCormick start."""
    params = params or TrustRegionParams()
    it = initial_iterate(problem, config)
    return _Linearized(problem, params).build(it, params.r0)


# the sequential loop -----------------------------------------------------------------

def synthesize_general(problem: SynthesisProblem, params: TrustRegionParams | None = None,
                       config: SolverConfig | None = None,
                       time_limit: float | None = None) -> SynthesisResult:
    params = params or TrustRegionParams()
    t0 = time.perf_counter()
    diag = SolverDiagnostics()

    def remaining():
        if time_limit is None:
            return None
        return max(time_limit - (time.perf_counter() - t0), 1e-3)

    def timed_out():
        return time_limit is not None and time.perf_counter() - t0 > time_limit

    def finish(status, it: Iterate | None, message=""):
        diag.wall_time = time.perf_counter() - t0
        if it is None:
            return SynthesisResult(status, PATH, diagnostics=diag, message=message)
        plan = it.plan(problem.horizon)
        diag.eps_bil = bilinear_error(plan)
        verdict = monitor_verdict(problem, plan)
        if status == SUCCESS and not (verdict and diag.eps_bil <= params.eps_acc):
            status = INACCURATE
        return SynthesisResult(status, PATH, plan, diag, verdict, it.cost, message=message)

    try:
        cur = initial_iterate(problem, config, remaining())
    except Infeasible as exc:
        return finish(INFEASIBLE, None, str(exc))
    except TimeoutError as exc:
        return finish(TIMEOUT, None, str(exc))
    diag.initial_accuracy = cur.accuracy
    lin = _Linearized(problem, params)
    r = params.r0
    steps = 0
    while r > params.r_min:
        if timed_out() or steps >= params.max_iter:
            return finish(TIMEOUT if timed_out() else INACCURATE, cur,
                          "time limit reached" if timed_out() else "iteration cap reached")
        steps += 1
        pm, sol = lin.solve(cur, r, config, remaining())
        if not sol.has_point:
            if sol.status == TIME_LIMIT:
                return finish(TIMEOUT, cur, "time limit reached in a subproblem")
            return finish(INFEASIBLE, cur, f"linearized subproblem is {sol.status}")
        dens, loop = pm.densities(sol.x)
        mats, f_new = recover_markov(problem.graph, dens, config)
        new = Iterate(dens, loop, mats, f_new, float(sol.objective))
        dL = abs(new.cost - cur.cost)
        if cur.accuracy > 0.0:
            rho = f_new / cur.accuracy
        else:
            rho = 0.0 if f_new == 0.0 else math.inf
        if dL <= params.eps_tol and min(cur.accuracy, f_new) <= params.eps_acc:
            diag.log(radius=r, cost=new.cost, accuracy=f_new, ratio=rho,
                     accepted=rho <= 1.0, delta_cost=dL)
            return finish(SUCCESS, new if f_new <= params.eps_acc else cur)
        accepted = rho <= 1.0
        diag.log(radius=r, cost=new.cost, accuracy=f_new, ratio=rho, accepted=accepted,
                 delta_cost=dL)
        if not accepted:
            r /= min(params.r_con, rho)
        else:
            cur = new
            r *= min(1.0 / rho if rho > 0 else math.inf, params.r_exp)
    ok = cur.accuracy <= params.eps_acc
    return finish(SUCCESS if ok else INACCURATE, cur,
                  "" if ok else "minimum trust radius reached above the accuracy tolerance")


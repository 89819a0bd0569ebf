"""Time-invariant plans for reach-avoid specifications.

Safety rows ``A x <= b`` over the stacked densities define the polytope
``Y = {x on the product of simplices : A x <= b}``.  A plan keeps ``Y``
invariant when a dual certificate ``(Y, S)`` exists with ``Y <= 0``,
``Y b + S 1 >= -b`` and ``Y A + S O <= -A blkdiag(M^1..M^m)``, where ``O``
is the sub-swarm block indicator.  All of it is linear in ``M``, so with the
ergodicity coefficient written through epigraph variables the scrambling
case is a single LP.  Non-scrambling graphs minimize the mixing rate of the
multiplicative reversibilization instead (:func:`synthesize_reach_avoid_spectral`).
"""

from __future__ import annotations

import time

import numpy as np

from ..core.graph import InputError, is_scrambling, is_strongly_connected
from ..core.plan import MarkovPlan, clean_stochastic, replay
from ..core.spectral import (centered_similarity, ergodicity_coefficient,
                             reversibilization_rate)
from ..gtl.formula import Always, And, Atom, Const, Formula
from ..opt import OPTIMAL, TIME_LIMIT, LinExpr, Model, SolverConfig, solve_lp
from ..opt.model import INF
from .builder import bilinear_error
from .problem import (INFEASIBLE, SUCCESS, TIMEOUT, SolverDiagnostics, SynthesisProblem,
                      SynthesisResult)

LP_PATH = "reach-avoid-lp"
SPECTRAL_PATH = "spectral"
FLOOR = 1e-3
SAFE_TOL = 1e-9


# safety rows -----------------------------------------------------------------

def _safety_atoms(phi: Formula) -> list[Atom] | None:
    """Atoms of ``phi`` when it is a conjunction of ``G(atom & ...)`` terms."""
    if isinstance(phi, And):
        a, b = _safety_atoms(phi.left), _safety_atoms(phi.right)
        return None if a is None or b is None else a + b
    if isinstance(phi, Const) and phi.value:
        return []
    if not isinstance(phi, Always):
        return None
    out, stack = [], [phi.arg]
    while stack:
        f = stack.pop()
        if isinstance(f, And):
            stack += [f.left, f.right]
        elif isinstance(f, Atom):
            out.append(f)
        elif isinstance(f, Always):
            stack.append(f.arg)
        elif not (isinstance(f, Const) and f.value):
            return None
    return out


def is_reach_avoid(problem: SynthesisProblem) -> bool:
    return problem.reach_avoid is not None and all(
        _safety_atoms(phi) is not None for phi, _ in problem.specs)


def safety_polytope(problem: SynthesisProblem) -> tuple[np.ndarray, np.ndarray]:
    """All safety rows over ``[x^1; ...; x^m]`` as one stacked ``(A, b)``."""
    g = problem.graph
    width = g.n_r * g.m
    rows, rhs = [], []
    spec = problem.reach_avoid
    for A, b in (spec.safety if spec is not None else []):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] != width:
            raise InputError(f"safety rows need {width} columns, got {A.shape[1]}")
        rows.append(A)
        rhs.append(np.asarray(b, dtype=float).reshape(-1))
    for phi, nodes in problem.specs:
        atoms = _safety_atoms(phi)
        if atoms is None:
            raise InputError(f"not a safety formula: {phi}")
        for at in atoms:
            if not at.A:
                continue
            for v in nodes:
                lab = g.labels[v]
                A = at.matrix()
                rows.append(A @ lab.stacked())
                rhs.append(at.effective_b() - A @ lab.offset)
    if not rows:
        return np.zeros((0, width)), np.zeros(0)
    return np.vstack(rows), np.concatenate(rhs)


def certificate_residual(A, b, Y, S, matrices) -> float:
    """Largest violation of the three invariance-certificate conditions."""
    A, b, Y, S = (np.asarray(v, dtype=float) for v in (A, b, Y, S))
    if A.shape[0] == 0:
        return 0.0
    m = len(matrices)
    n = matrices[0].shape[0]
    O = np.kron(np.eye(m), np.ones((1, n)))
    big = np.zeros((m * n, m * n))
    for s, M in enumerate(matrices):
        big[s * n:(s + 1) * n, s * n:(s + 1) * n] = M
    r1 = float(np.max(Y, initial=0.0))
    r2 = float(np.max(-b - (Y @ b + S.sum(axis=1)), initial=0.0))
    r3 = float(np.max(Y @ A + S @ O + A @ big, initial=0.0))
    return max(r1, r2, r3)


# shared LP model -----------------------------------------------------------------

class _RAModel:
    def __init__(self, problem: SynthesisProblem, floor: float = 0.0):
        g = problem.graph
        spec = problem.reach_avoid
        self.problem, self.graph = problem, g
        n, m = g.n_r, g.m
        self.n, self.m = n, m
        self.nu = [np.asarray(v, dtype=float) for v in spec.targets]
        mdl = self.model = Model("reach_avoid")
        self.M: list[dict] = []
        for s in range(m):
            sup = g.support(s)
            mt = {(int(i), int(j)): mdl.add_var(f"M_s{s}_{i}_{j}", floor, 1.0)
                  for i, j in zip(*np.nonzero(sup))}
            for j in range(n):
                mdl.add_constr(LinExpr({v: 1.0 for (i, jj), v in mt.items() if jj == j}),
                               "==", 1.0, name=f"stoch_s{s}_{j}")
            nu = self.nu[s]
            for i in range(n):
                row = {v: float(nu[j]) for (ii, j), v in mt.items() if ii == i and nu[j]}
                mdl.add_constr(LinExpr(row), "==", float(nu[i]), name=f"stat_s{s}_{i}")
            self.M.append(mt)
        self.A, self.b = safety_polytope(problem)
        self.Y = self.S = None
        if self.A.shape[0]:
            self._certificate()

    def _certificate(self) -> None:
        A, b, mdl = self.A, self.b, self.model
        p, n, m = A.shape[0], self.n, self.m
        Y = np.array([[mdl.add_var(f"Y_{k}_{q}", -INF, 0.0) for q in range(p)] for k in range(p)])
        S = np.array([[mdl.add_var(f"S_{k}_{s}", -INF, INF) for s in range(m)] for k in range(p)])
        for k in range(p):
            e = LinExpr({int(Y[k, q]): float(b[q]) for q in range(p) if b[q]})
            e.iadd(LinExpr({int(S[k, s]): 1.0 for s in range(m)}))
            mdl.add_constr(e, ">=", -float(b[k]), name=f"cert_b_{k}")
            for s in range(m):
                for j in range(n):
                    c = s * n + j
                    e = LinExpr({int(Y[k, q]): float(A[q, c]) for q in range(p) if A[q, c]})
                    e.iadd(LinExpr.var(int(S[k, s])))
                    for i in range(n):
                        a = A[k, s * n + i]
                        v = self.M[s].get((i, j))
                        if a and v is not None:
                            e.iadd(LinExpr.var(v, float(a)))
                    mdl.add_constr(e, "<=", 0.0, name=f"cert_A_{k}_{c}")
        self.Y, self.S = Y, S

    def cost_expr(self) -> LinExpr:
        out = LinExpr()
        cost = self.problem.cost
        for s in range(self.m):
            C = cost.matrix_weights(s)
            if C is None:
                continue
            for (i, j), v in self.M[s].items():
                if C[i, j]:
                    out.iadd(LinExpr.var(v, float(C[i, j])))
        return out

    def add_tau(self, s: int) -> int:
        """Epigraph variable ``tau >= tau_1(M^s)``."""
        mdl, mt, n = self.model, self.M[s], self.n
        tau = mdl.add_var(f"tau_s{s}", 0.0, 1.0)
        for i in range(n):
            for j in range(i + 1, n):
                half = LinExpr()
                for p in range(n):
                    a, c = mt.get((p, i)), mt.get((p, j))
                    if a is None and c is None:
                        continue
                    u = mdl.add_var(f"u_s{s}_{p}_{i}_{j}", 0.0, 1.0)
                    diff = LinExpr.lift(0.0)
                    if a is not None:
                        diff.iadd(LinExpr.var(a))
                    if c is not None:
                        diff.iadd(LinExpr.var(c), -1.0)
                    mdl.add_constr(LinExpr.var(u) - diff, ">=", 0.0)
                    mdl.add_constr(LinExpr.var(u) + diff, ">=", 0.0)
                    half.iadd(LinExpr.var(u), 0.5)
                mdl.add_constr(LinExpr.var(tau) - half, ">=", 0.0, name=f"tau_s{s}_{i}_{j}")
        return tau

    def matrices(self, x: np.ndarray) -> list[np.ndarray]:
        out = []
        for s, mt in enumerate(self.M):
            M = np.zeros((self.n, self.n))
            for (i, j), v in mt.items():
                M[i, j] = x[v]
            M, _ = clean_stochastic(M, self.graph.support(s))
            out.append(M)
        return out

    def certificate(self, x: np.ndarray) -> dict | None:
        if self.Y is None:
            return None
        return {"Y": x[self.Y], "S": x[self.S], "A": self.A, "b": self.b}


def reach_avoid_model(problem: SynthesisProblem, floor: float = 0.0) -> _RAModel:
    """LP over the matrices: cost plus weighted ergodicity epigraphs."""
    ram = _RAModel(problem, floor)
    obj = ram.cost_expr()
    for s in range(ram.m):
        c = problem.reach_avoid.weight(s)
        if c > 0:
            obj.iadd(LinExpr.var(ram.add_tau(s)), c)
    ram.model.set_objective(obj)
    return ram


def _check_inputs(problem: SynthesisProblem) -> None:
    g, spec = problem.graph, problem.reach_avoid
    if spec is None:
        raise InputError("the problem has no reach-avoid block")
    if len(spec.targets) != g.m:
        raise InputError(f"expected {g.m} stationary targets, got {len(spec.targets)}")
    for s, nu in enumerate(spec.targets):
        nu = np.asarray(nu, dtype=float)
        if nu.shape != (g.n_r,) or np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
            raise InputError(f"target of sub-swarm {s} is not a distribution")
        if not is_strongly_connected(g.adjacency[s]):
            raise InputError(f"graph of sub-swarm {s} is not strongly connected")
        if np.any(nu <= 0):
            raise InputError(f"target of sub-swarm {s} must be positive on a strongly "
                             "connected graph")
    if spec.weights is not None and any(float(c) < 0 for c in spec.weights):
        raise InputError("convergence weights must be nonnegative")
    A, b = safety_polytope(problem)
    if A.shape[0]:
        viol = A @ np.concatenate(problem.x0) - b
        if np.max(viol) > SAFE_TOL:
            raise InputError(f"initial densities violate safety row {int(np.argmax(viol))} "
                             f"by {float(np.max(viol)):.3g}")


def _plan(problem: SynthesisProblem, mats: list[np.ndarray], path: str) -> MarkovPlan:
    dens = replay(problem.x0, [[M] for M in mats], problem.horizon)
    return MarkovPlan(tuple((M,) for M in mats), tuple(dens), problem.horizon,
                      time_invariant=True, meta={"path": path})


def _safe_along(problem: SynthesisProblem, plan: MarkovPlan, tol: float = 1e-7) -> bool:
    A, b = safety_polytope(problem)
    if not A.shape[0]:
        return True
    T = plan.densities[0].shape[0]
    for t in range(T):
        x = np.concatenate([d[t] for d in plan.densities])
        if np.max(A @ x - b) > tol:
            return False
    return True


def synthesize_reach_avoid_lp(problem: SynthesisProblem, config: SolverConfig | None = None,
                              time_limit: float | None = None) -> SynthesisResult:
    """Minimize cost plus weighted ergodicity coefficients under the certificate."""
    _check_inputs(problem)
    g = problem.graph
    for s in range(g.m):
        if not is_scrambling(g.adjacency[s]):
            raise InputError(f"graph of sub-swarm {s} is not scrambling; the ergodicity "
                             "coefficient is stuck at 1 there, use the spectral path")
    t0 = time.perf_counter()
    diag = SolverDiagnostics()
    spec = problem.reach_avoid

    def attempt(floor: float):
        ram = reach_avoid_model(problem, floor)
        return ram, solve_lp(ram.model, config, time_limit=time_limit)

    ram, sol = attempt(0.0)
    if sol.has_point:
        taus = [ergodicity_coefficient(M) for M in ram.matrices(sol.x)]
        stuck = [s for s in range(g.m) if taus[s] >= 1.0 - 1e-9]
        if any(spec.weight(s) > 0 for s in stuck):
            # tau_1 was minimized and still reached 1
            diag.wall_time = time.perf_counter() - t0
            return SynthesisResult(
                INFEASIBLE, LP_PATH, diagnostics=diag,
                message=f"every stationary matrix keeping the safety set invariant has "
                        f"tau_1 = 1 for sub-swarm(s) {stuck}")
        if stuck:
            # zero weights leave tau_1 unconstrained; an entrywise floor on the
            # support bounds it by 1 - floor on a scrambling pattern
            diag.notes.append(f"tau_1 reached 1; re-solved with entries >= {FLOOR}")
            ram, sol = attempt(FLOOR)
    diag.wall_time = time.perf_counter() - t0
    if not sol.has_point:
        status = TIMEOUT if sol.status == TIME_LIMIT else INFEASIBLE
        return SynthesisResult(status, LP_PATH, diagnostics=diag, message=sol.message)
    mats = ram.matrices(sol.x)
    plan = _plan(problem, mats, LP_PATH)
    diag.eps_bil = bilinear_error(plan)
    diag.rates = [ergodicity_coefficient(M) for M in mats]
    cert = ram.certificate(sol.x)
    verdict = _safe_along(problem, plan) and all(t < 1.0 for t in diag.rates)
    status = SUCCESS if sol.status == OPTIMAL and verdict else INFEASIBLE
    return SynthesisResult(status, LP_PATH, plan, diag, verdict, sol.objective, cert)


# spectral path ------------------------------------------------------------------

def _rate_and_cuts(M: np.ndarray, nu: np.ndarray, rel: float = 1e-9):
    """``sigma_max^2`` of the centered similarity and its (sub)gradients in ``M``."""
    r = np.sqrt(nu)
    B = centered_similarity(M, nu)
    U, sig, Vt = np.linalg.svd(B)
    top = sig[0]
    grads = []
    for k in range(len(sig)):
        if sig[k] < top - rel * max(top, 1.0):
            break
        u, v = U[:, k], Vt[k]
        # d sigma / dM = (Q^-1 u)(Q v)^T with Q = diag(r)
        grads.append(2.0 * top * np.outer(u / r, v * r))
    return float(top ** 2), grads


def synthesize_reach_avoid_spectral(problem: SynthesisProblem,
                                    config: SolverConfig | None = None,
                                    time_limit: float | None = None,
                                    max_iter: int = 200, tol: float = 1e-7,
                                    radius: float = 0.5) -> SynthesisResult:
    """Cutting-plane descent on the reversibilization rate inside a box trust region."""
    _check_inputs(problem)
    g, spec = problem.graph, problem.reach_avoid
    t0 = time.perf_counter()
    diag = SolverDiagnostics()
    ram = _RAModel(problem)
    mdl = ram.model
    base_obj = ram.cost_expr()
    mdl.set_objective(base_obj)
    sol = solve_lp(mdl, config, time_limit=time_limit)
    if not sol.has_point:
        diag.wall_time = time.perf_counter() - t0
        status = TIMEOUT if sol.status == TIME_LIMIT else INFEASIBLE
        return SynthesisResult(status, SPECTRAL_PATH, diagnostics=diag, message=sol.message)

    weights = [spec.weight(s) for s in range(g.m)]
    active = [s for s in range(g.m) if weights[s] > 0]
    mvars = [np.array(list(ram.M[s].values())) for s in range(g.m)]
    theta = {s: mdl.add_var(f"theta_s{s}", 0.0, INF) for s in active}
    obj = base_obj.copy()
    for s in active:
        obj.iadd(LinExpr.var(theta[s]), weights[s])
    mdl.set_objective(obj)
    lb0, ub0 = list(mdl.lb), list(mdl.ub)

    def evaluate(x):
        mats = ram.matrices(x)
        rates = [reversibilization_rate(M, ram.nu[s]) for s, M in enumerate(mats)]
        val = base_obj.value(x) + sum(weights[s] * rates[s] for s in active)
        return mats, rates, val

    def add_cuts(x, mats):
        for s in active:
            f, grads = _rate_and_cuts(mats[s], ram.nu[s])
            for G in grads:
                e = LinExpr.var(theta[s])
                rhs = f
                for (i, j), v in ram.M[s].items():
                    if G[i, j]:
                        e.iadd(LinExpr.var(v), -float(G[i, j]))
                        rhs -= float(G[i, j]) * mats[s][i, j]
                mdl.add_constr(e, ">=", rhs)

    x = sol.x.copy()
    mats, rates, fval = evaluate(x)
    diag.rates.append(list(rates))
    status = SUCCESS
    for it in range(max_iter if active else 0):
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = TIMEOUT
            break
        add_cuts(x, mats)
        for s in range(g.m):
            for v in mvars[s]:
                mdl.lb[v] = max(lb0[v], x[v] - radius)
                mdl.ub[v] = min(ub0[v], x[v] + radius)
        res = solve_lp(mdl, config)
        if not res.has_point:
            radius /= 2.0
            if radius < 1e-10:
                break
            continue
        pred = fval - res.objective
        if pred <= tol:
            break
        cand, crates, cval = evaluate(res.x)
        better = cval <= fval - 0.1 * pred and all(
            crates[s] <= rates[s] + 1e-12 for s in active)
        diag.log(radius=radius, cost=float(res.objective), accuracy=float(cval),
                 ratio=float((fval - cval) / pred), accepted=better, delta_cost=float(pred))
        if better:
            if cval <= fval - 0.75 * pred:
                radius = min(2.0 * radius, 1.0)
            x, mats, rates, fval = res.x.copy(), cand, crates, cval
            diag.rates.append(list(rates))
        else:
            add_cuts(res.x, cand)
            radius /= 2.0
            if radius < 1e-10:
                break
    for v in range(len(lb0)):
        mdl.lb[v], mdl.ub[v] = lb0[v], ub0[v]
    diag.wall_time = time.perf_counter() - t0
    plan = _plan(problem, mats, SPECTRAL_PATH)
    plan.meta["rates"] = list(rates)
    diag.eps_bil = bilinear_error(plan)
    cert = ram.certificate(x)
    verdict = _safe_along(problem, plan)
    if status == SUCCESS and not verdict:
        status = INFEASIBLE
    return SynthesisResult(status, SPECTRAL_PATH, plan, diag, verdict, fval, cert)

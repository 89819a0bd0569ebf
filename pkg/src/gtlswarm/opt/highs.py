"""HiGHS engine through :mod:`scipy.optimize` (the default, bundled engine)."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .model import (FEAS_TOL, INFEASIBLE, ITERATION_LIMIT, NUMERICAL, OPTIMAL,
                    TIME_LIMIT, UNBOUNDED, Model, Solution)

MILP_TOL = 1e-9


def _signed_objective(model: Model) -> tuple[np.ndarray, float]:
    c = model.objective_vector()
    s = 1.0 if model.sense == "min" else -1.0
    return s * c, s


def _finish(model: Model, sol: Solution) -> Solution:
    if sol.x is not None:
        sol.objective = model.objective_value(sol.x)
    return sol


def _limit_status(message: str) -> str:
    return TIME_LIMIT if "time" in message.lower() else ITERATION_LIMIT


def solve_lp(model: Model, time_limit: float | None = None,
             tol: float = FEAS_TOL) -> Solution:
    if model.num_binaries:
        raise ValueError("solve_lp called on a model with binary variables")
    if model.conflicts:
        return Solution(INFEASIBLE, message="constant row violated: " + model.conflicts[0])
    n = model.num_vars
    if n == 0:
        return _finish(model, Solution(OPTIMAL, x=np.zeros(0), duals=np.zeros(0)))
    c, s = _signed_objective(model)
    A = model.matrix().tocsr()
    senses = np.array([r.sense for r in model.rows])
    rhs = np.array([r.rhs for r in model.rows])
    le, ge, eq = senses == "<=", senses == ">=", senses == "=="
    ub_rows = np.concatenate([np.flatnonzero(le), np.flatnonzero(ge)])
    sign = np.concatenate([np.ones(le.sum()), -np.ones(ge.sum())])
    A_ub = b_ub = A_eq = b_eq = None
    if len(ub_rows):
        A_ub = A[ub_rows].multiply(sign[:, None]).tocsr()
        b_ub = rhs[ub_rows] * sign
    eq_rows = np.flatnonzero(eq)
    if len(eq_rows):
        A_eq = A[eq_rows]
        b_eq = rhs[eq_rows]
    lb, ub = model.bounds()
    ptol = max(tol * 1e-2, 1e-10)
    options = {"primal_feasibility_tolerance": ptol,
               "dual_feasibility_tolerance": ptol, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=np.column_stack([lb, ub]), method="highs", options=options)
    if res.status == 0:
        duals = np.zeros(model.num_rows)
        if len(ub_rows):
            duals[ub_rows] = s * sign * res.ineqlin.marginals
        if len(eq_rows):
            duals[eq_rows] = s * res.eqlin.marginals
        sol = Solution(OPTIMAL, x=np.asarray(res.x, dtype=float), duals=duals,
                       iterations=int(getattr(res, "nit", 0)))
        return _finish(model, sol)
    if res.status == 2:
        return Solution(INFEASIBLE, message=res.message)
    if res.status == 3:
        return Solution(UNBOUNDED, message=res.message)
    if res.status == 1:
        return Solution(_limit_status(res.message), message=res.message)
    return Solution(NUMERICAL, message=res.message)


def solve_milp(model: Model, time_limit: float | None = None, gap: float = 1e-6,
               tol: float = FEAS_TOL) -> Solution:
    if model.conflicts:
        return Solution(INFEASIBLE, message="constant row violated: " + model.conflicts[0])
    if not model.num_binaries:
        return solve_lp(model, time_limit=time_limit, tol=tol)
    c, s = _signed_objective(model)
    lb, ub = model.bounds()
    integrality = np.array(model.binary, dtype=np.uint8)
    constraints = []
    if model.rows:
        lo, hi = model.row_bounds()
        constraints.append(LinearConstraint(model.matrix(), lo, hi))
    # strictness margins are 1e-6, so the engine must work well below that
    options = {"mip_rel_gap": gap, "presolve": True, "disp": False,
               "mip_feasibility_tolerance": MILP_TOL, "primal_feasibility_tolerance": MILP_TOL}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Unrecognized options")
        res = milp(c, integrality=integrality, bounds=Bounds(lb, ub),
                   constraints=constraints, options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    bound = getattr(res, "mip_dual_bound", None)
    if bound is not None:
        bound = s * float(bound) + model.objective.const
    if res.x is None:
        if res.status == 2:
            return Solution(INFEASIBLE, message=res.message, nodes=nodes)
        if res.status == 3:
            return Solution(UNBOUNDED, message=res.message, nodes=nodes)
        if res.status == 1:
            return Solution(_limit_status(res.message), message=res.message, nodes=nodes)
        return Solution(NUMERICAL, message=res.message, nodes=nodes)
    x = polish(model, np.asarray(res.x, dtype=float), tol)
    status = OPTIMAL if res.status == 0 else _limit_status(res.message)
    return _finish(model, Solution(status, x=x, bound=bound, nodes=nodes, message=res.message))


def polish(model: Model, x: np.ndarray, tol: float = FEAS_TOL) -> np.ndarray:
    """Round binaries, then re-solve the remaining LP with tight tolerances.

    MILP engines report points that satisfy rows only up to their own
    tolerance; re-solving the continuous part cleans that up.  The original
    point is returned if the LP does not improve feasibility.
    """
    fixed = model.copy()
    for i, b in enumerate(model.binary):
        if b:
            v = float(round(x[i]))
            fixed.lb[i] = fixed.ub[i] = v
            fixed.binary[i] = False
    sol = solve_lp(fixed, tol=tol * 1e-2)
    if sol.ok and model.max_violation(sol.x) <= max(model.max_violation(x), tol):
        xr = sol.x.copy()
        b = np.array(model.binary)
        xr[b] = np.round(xr[b])
        return xr
    return x

"""Shared MILP scaffolding: encoded specifications, Markov variables, cost."""

from __future__ import annotations

import numpy as np

from ..core.plan import MarkovPlan
from ..encoding.encoder import ConstraintSystem
from ..opt.model import LinExpr, Model
from .problem import SynthesisProblem


class PlanModel:
    """Density trajectory variables with the specifications enforced.

    The initial densities are fixed, every ``x^s(t)`` lies on the simplex and
    the lasso closes on the densities themselves (``x(k) = x(l-1)``), so any
    matrices fitted along the trajectory repeat consistently past the horizon.
    """

    def __init__(self, problem: SynthesisProblem, name: str = "plan"):
        self.problem = problem
        self.graph = problem.graph
        self.k = problem.horizon
        self.model = Model(name)
        self.cs = ConstraintSystem(self.graph, self.k, self.model)
        self.cs.add_simplex_rows()
        self.cs.add_density_loop_rows()
        for s, x0 in enumerate(problem.x0):
            for i, v in enumerate(self.cs.x[s][0]):
                self.model.fix(int(v), float(x0[i]))
        for phi, nodes in problem.specs:
            self.cs.enforce(phi, nodes)
        self.M: list[list[dict]] = []

    @property
    def x(self) -> list[np.ndarray]:
        return self.cs.x

    def xvar(self, s: int, t: int, i: int) -> int:
        return int(self.cs.x[s][t][i])

    def add_matrices(self, lb: float = 0.0) -> None:
        """``M^s(t)`` on the graph support with unit column sums, ``t < k``."""
        g, mdl = self.graph, self.model
        for s in range(g.m):
            sup = g.support(s)
            seq = []
            for t in range(self.k):
                mt = {}
                for i, j in zip(*np.nonzero(sup)):
                    mt[int(i), int(j)] = mdl.add_var(f"M_s{s}_t{t}_{i}_{j}", lb, 1.0)
                for j in range(g.n_r):
                    col = {v: 1.0 for (i, jj), v in mt.items() if jj == j}
                    mdl.add_constr(LinExpr(col), "==", 1.0, name=f"stoch_s{s}_t{t}_{j}")
                seq.append(mt)
            self.M.append(seq)

    def cost_expr(self, matrices: bool = True) -> LinExpr:
        cost, g = self.problem.cost, self.graph
        out = LinExpr()
        for s in range(g.m):
            for t in range(self.k + 1):
                w = cost.density_weights(s, t, g.n_r)
                if w is None:
                    continue
                for i in range(g.n_r):
                    if w[i]:
                        out.iadd(LinExpr.var(self.xvar(s, t, i), float(w[i])))
            C = cost.matrix_weights(s)
            if C is None:
                continue
            if matrices and self.M:
                for t in range(self.k):
                    for (i, j), v in self.M[s][t].items():
                        if C[i, j]:
                            out.iadd(LinExpr.var(v, float(C[i, j])))
            elif not matrices:
                # complete-graph substitution M_ij(t) = x_i(t+1)
                weight = C.sum(axis=1)
                for t in range(self.k):
                    for i in range(g.n_r):
                        if weight[i]:
                            out.iadd(LinExpr.var(self.xvar(s, t + 1, i), float(weight[i])))
        if cost.loop:
            for j, v in enumerate(self.cs.loop, start=1):
                out.iadd(LinExpr.var(v, float(j + 1)))
        return out

    # reading a solution ----------------------------------------------------
    def loop_index(self, sol_x: np.ndarray) -> int:
        return 1 + int(np.argmax([sol_x[v] for v in self.cs.loop]))

    def densities(self, sol_x: np.ndarray) -> tuple[list[np.ndarray], int]:
        """Simplex-clean densities and the loop index, with ``x(k) = x(l-1)`` exact."""
        loop = self.loop_index(sol_x)
        out = []
        for s in range(self.graph.m):
            x = np.clip(sol_x[self.cs.x[s]], 0.0, None)
            x /= x.sum(axis=1, keepdims=True)
            x[0] = self.problem.x0[s]
            x[self.k] = x[loop - 1]
            out.append(x)
        return out, loop

    def matrices(self, sol_x: np.ndarray) -> list[list[np.ndarray]]:
        n = self.graph.n_r
        out = []
        for seq in self.M:
            mats = []
            for mt in seq:
                A = np.zeros((n, n))
                for (i, j), v in mt.items():
                    A[i, j] = sol_x[v]
                mats.append(A)
            out.append(mats)
        return out


def bilinear_error(plan: MarkovPlan) -> float:
    """``max_s max_t ||x(t+1) - M(t) x(t)||_inf`` over the stored horizon."""
    worst = 0.0
    for s in range(plan.m):
        x = plan.densities[s]
        for t in range(x.shape[0] - 1):
            r = x[t + 1] - plan.matrix(s, t) @ x[t]
            worst = max(worst, float(np.max(np.abs(r))))
    return worst

"""Revised bounded-variable primal simplex.

Each row ``lo <= a.x <= hi`` gets a logical variable ``w = a.x`` carrying
the row bounds, so the working system is ``A x - w = 0`` with every column
bounded (possibly on one side only, or free).  Variable bounds are handled
directly by the ratio test instead of extra rows, which keeps the basis at
one column per model row.

The basis is factorized with a sparse LU and updated with product-form
etas between refactorizations.  Phase 1 minimizes the sum of bound
violations of the basic variables; phase 2 runs on the true cost.  The ratio
test is Harris' two-pass rule; pricing is Dantzig's rule with a fall back to
Bland's rule after a run of degenerate pivots.

A solve may start from the basis of an earlier solve of the same model
(``warm``), which is how branch-and-bound children reuse their parent.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import (FEAS_TOL, INFEASIBLE, ITERATION_LIMIT, NUMERICAL, OPTIMAL,
                    TIME_LIMIT, UNBOUNDED, Model, Solution)

PIVOT_TOL = 1e-9
PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
DEGENERATE_RUN = 50
REFACTOR_EVERY = 64


@dataclass(frozen=True)
class Basis:
    """Basic column per row plus the side each nonbasic column sits on."""

    head: np.ndarray
    at_upper: np.ndarray
    factor: "_Factor | None" = None


class _Singular(Exception):
    pass


class _Factor:
    """``B^-1`` as a sparse LU of the last refactorized basis times etas."""

    def __init__(self, B: sp.csc_matrix | None, base: "_Factor | None" = None):
        if base is not None:
            self.lu = base.lu
            self.etas = list(base.etas)
            return
        try:
            self.lu = splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise _Singular(str(exc)) from exc
        diag = np.abs(self.lu.U.diagonal())
        if not len(diag) or diag.min() <= 1e-11 * max(1.0, diag.max()):
            raise _Singular("near-singular basis")
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        v = self.lu.solve(a)
        for r, alpha in self.etas:
            vr = v[r] / alpha[r]
            if vr != 0.0:
                v -= vr * alpha
            v[r] = vr
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        w = c.astype(float, copy=True)
        for r, alpha in reversed(self.etas):
            w[r] = (w[r] - (w @ alpha - w[r] * alpha[r])) / alpha[r]
        return self.lu.solve(w, trans="T")

    def push(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha))


class BoundedLP:
    """An LP prepared once and solved for any variable bounds."""

    def __init__(self, model: Model):
        n, m = model.num_vars, model.num_rows
        self.model = model
        self.n, self.m = n, m
        A = model.matrix().tocsc() if m else sp.csc_matrix((0, n))
        self.K = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.KT = self.K.T.tocsr()
        self.sign = 1.0 if model.sense == "min" else -1.0
        self.c = np.concatenate([self.sign * model.objective_vector(), np.zeros(m)])
        lo, hi = model.row_bounds()
        self.row_lo = np.asarray(lo, dtype=float)
        self.row_hi = np.asarray(hi, dtype=float)

    # helpers -------------------------------------------------------------
    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        s, e = self.K.indptr[j], self.K.indptr[j + 1]
        col[self.K.indices[s:e]] = self.K.data[s:e]
        return col

    def _factor(self, head: np.ndarray) -> _Factor:
        return _Factor(self.K[:, head].tocsc())

    def _basic_values(self, fac: _Factor, head: np.ndarray, x: np.ndarray) -> np.ndarray:
        xn = x.copy()
        xn[head] = 0.0
        return fac.ftran(-(self.K @ xn))

    @staticmethod
    def _resting(l: np.ndarray, u: np.ndarray, upper: np.ndarray) -> np.ndarray:
        fl, fu = np.isfinite(l), np.isfinite(u)
        x = np.where(fu, u, 0.0)
        x = np.where(fl, l, x)
        return np.where(upper & fu, u, x)

    def _violation(self, x: np.ndarray, lbv: np.ndarray, ubv: np.ndarray) -> float:
        xs = x[:self.n]
        act = self.K[:, :self.n] @ xs if self.m else np.zeros(0)
        parts = [np.maximum(lbv - xs, 0.0), np.maximum(xs - ubv, 0.0),
                 np.maximum(self.row_lo - act, 0.0), np.maximum(act - self.row_hi, 0.0)]
        return float(max((p.max(initial=0.0) for p in parts)))

    # main entry ----------------------------------------------------------
    def solve(self, lb=None, ub=None, warm: Basis | None = None,
              time_limit: float | None = None, max_iter: int = 50_000,
              tol: float = FEAS_TOL) -> tuple[Solution, Basis | None]:
        model, n, m = self.model, self.n, self.m
        if model.conflicts:
            return Solution(INFEASIBLE, message="constant row violated: "
                            + model.conflicts[0]), None
        lbv = np.array(model.lb if lb is None else lb, dtype=float)
        ubv = np.array(model.ub if ub is None else ub, dtype=float)
        if np.any(lbv > ubv + tol):
            return Solution(INFEASIBLE, message="empty variable bounds"), None
        l = np.concatenate([lbv, self.row_lo])
        u = np.concatenate([ubv, self.row_hi])
        deadline = None if time_limit is None else time.monotonic() + time_limit

        if m == 0:
            return self._no_rows(l, u), None

        fac = None
        if warm is not None:
            head, at_upper = warm.head.copy(), warm.at_upper.copy()
            if warm.factor is not None:
                fac = _Factor(None, warm.factor)
        else:
            head, at_upper = np.arange(n, n + m), np.zeros(n + m, dtype=bool)
        if fac is None:
            try:
                fac = self._factor(head)
            except _Singular:
                head, at_upper = np.arange(n, n + m), np.zeros(n + m, dtype=bool)
                fac = self._factor(head)
        x = self._resting(l, u, at_upper)
        is_basic = np.zeros(n + m, dtype=bool)
        is_basic[head] = True
        x[head] = self._basic_values(fac, head, x)

        iters = 0
        degenerate = 0
        bland = False
        phase = 1
        scale = max(1.0, float(np.max(np.abs(np.concatenate(
            [l[np.isfinite(l)], u[np.isfinite(u)]])), initial=0.0)))
        ptol = PRIMAL_TOL * scale

        while True:
            if iters >= max_iter:
                return Solution(ITERATION_LIMIT, iterations=iters), None
            if deadline is not None and time.monotonic() > deadline:
                return Solution(TIME_LIMIT, iterations=iters), None
            if len(fac.etas) >= REFACTOR_EVERY:
                try:
                    fac = self._factor(head)
                except _Singular:
                    return Solution(NUMERICAL, message="singular basis",
                                    iterations=iters), None
                x[head] = self._basic_values(fac, head, x)

            xb = x[head]
            below = xb < l[head] - ptol
            above = xb > u[head] + ptol
            if phase == 1:
                if not (below.any() or above.any()):
                    phase = 2
                    degenerate, bland = 0, False
                    continue
                cb = above.astype(float) - below.astype(float)
                cost = np.zeros(n + m)
            else:
                cb = self.c[head]
                cost = self.c
            y = fac.btran(cb)
            d = cost - self.KT @ y
            d[is_basic] = 0.0

            at_l = np.isfinite(l) & (np.abs(x - l) <= ptol)
            at_u = np.isfinite(u) & (np.abs(x - u) <= ptol)
            fixed = at_l & at_u
            can_up = ~is_basic & ~fixed & ~at_u & (d < -DUAL_TOL)
            can_down = ~is_basic & ~fixed & ~at_l & (d > DUAL_TOL)
            cand = np.flatnonzero(can_up | can_down)
            if not len(cand):
                if phase == 1:
                    return Solution(INFEASIBLE, iterations=iters), None
                break
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = fac.ftran(self._column(q))
            delta = -direction * alpha  # change of x_B per unit step
            theta, r, leave_at = self._ratio(x, head, l, u, delta, phase, ptol)
            span = (u[q] - x[q]) if direction > 0 else (x[q] - l[q])
            if span < theta:
                theta, r = span, -1
            if math.isinf(theta):
                if phase == 1:
                    return Solution(NUMERICAL, message="phase 1 ray",
                                    iterations=iters), None
                return Solution(UNBOUNDED, iterations=iters), None

            theta = max(theta, 0.0)
            degenerate = degenerate + 1 if theta <= ptol else 0
            if degenerate > DEGENERATE_RUN:
                bland = True
            x[q] += direction * theta
            x[head] += theta * delta
            if r >= 0:
                p = int(head[r])
                x[p] = leave_at
                at_upper[p] = leave_at == u[p] and math.isfinite(u[p])
                is_basic[p] = False
                head[r] = q
                is_basic[q] = True
                fac.push(r, alpha)
            else:
                at_upper[q] = direction > 0
            iters += 1

        # recompute basic values from the nonbasic ones before reporting
        x[head] = self._basic_values(fac, head, x)
        y = fac.btran(self.c[head])
        xs = x[:n]
        viol = self._violation(x, lbv, ubv)
        if viol > 10 * tol * scale:
            return Solution(NUMERICAL, message="solution fails row check",
                            iterations=iters), None
        duals = self.sign * y
        sol = Solution(OPTIMAL, x=xs.copy(), objective=model.objective_value(xs),
                       duals=duals, iterations=iters)
        return sol, Basis(head.copy(), at_upper.copy(), _Factor(None, fac))

    def _ratio(self, x, head, l, u, delta, phase, ptol):
        """Harris two-pass ratio test; returns (step, row or -1, leaving value)."""
        xb, lb, ub = x[head], l[head], u[head]
        down = delta < -PIVOT_TOL
        up = delta > PIVOT_TOL
        target = np.full(len(xb), np.nan)
        if phase == 1:
            # an infeasible basic stops where it becomes feasible
            over = down & (xb > ub + ptol)
            under = up & (xb < lb - ptol)
            target[over] = ub[over]
            target[under] = lb[under]
            dn = down & ~over & (xb >= lb - ptol)
            upm = up & ~under & (xb <= ub + ptol)
        else:
            dn, upm = down, up
        target[dn] = lb[dn]
        target[upm] = ub[upm]
        idx = np.flatnonzero(np.isfinite(target))
        if not len(idx):
            return math.inf, -1, 0.0
        dist = np.abs(target[idx] - xb[idx])
        piv = np.abs(delta[idx])
        theta_max = float(np.min((dist + ptol) / piv))
        exact = dist / piv
        ok = np.flatnonzero(exact <= theta_max)
        best = piv[ok].max()
        tie = ok[piv[ok] >= best * (1 - 1e-12)]
        k = int(min(tie, key=lambda i: head[idx[i]]))
        r = int(idx[k])
        return float(exact[k]), r, float(target[r])

    def _no_rows(self, l, u) -> Solution:
        n = self.n
        x = np.zeros(n)
        for j in range(n):
            cj = self.c[j]
            if cj > 0:
                if not math.isfinite(l[j]):
                    return Solution(UNBOUNDED)
                x[j] = l[j]
            elif cj < 0:
                if not math.isfinite(u[j]):
                    return Solution(UNBOUNDED)
                x[j] = u[j]
            else:
                x[j] = self._resting(l[j], u[j], False)
        return Solution(OPTIMAL, x=x, objective=self.model.objective_value(x),
                        duals=np.zeros(0))


def solve_lp(model: Model, time_limit: float | None = None, tol: float = FEAS_TOL,
             max_iter: int = 50_000, lb=None, ub=None) -> Solution:
    """Solve an LP with the bounded simplex.  ``lb``/``ub`` override bounds."""
    if model.num_binaries and lb is None:
        raise ValueError("solve_lp called on a model with binary variables")
    sol, _ = BoundedLP(model).solve(lb, ub, time_limit=time_limit, max_iter=max_iter, tol=tol)
    return sol

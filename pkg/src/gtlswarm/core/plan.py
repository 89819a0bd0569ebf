"""Density states and Markov plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import InputError, LabeledGraph

STOCH_TOL = 1e-9
NONNEG_TOL = 1e-12


def check_density(x, tol: float = STOCH_TOL, what: str = "density") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"{what} must be a vector")
    if np.any(x < -tol):
        raise InputError(f"{what} has a negative entry {x.min():.3g}")
    if abs(x.sum() - 1.0) > tol:
        raise InputError(f"{what} sums to {x.sum():.12g}, not 1")
    return x


@dataclass(frozen=True, eq=False)
class DensityState:
    """One simplex vector per sub-swarm."""

    xs: tuple

    def __init__(self, xs: Sequence, tol: float = STOCH_TOL):
        vals = []
        for s, x in enumerate(xs):
            v = check_density(x, tol, f"density of sub-swarm {s}").copy()
            v.setflags(write=False)
            vals.append(v)
        object.__setattr__(self, "xs", tuple(vals))

    def __getitem__(self, s: int) -> np.ndarray:
        return self.xs[s]

    def __len__(self) -> int:
        return len(self.xs)


def stochastic_error(M) -> float:
    """Largest deviation of a column sum from 1."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(M.sum(axis=0) - 1.0), initial=0.0))


def is_column_stochastic(M, tol: float = STOCH_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return stochastic_error(M) <= tol and float(M.min(initial=0.0)) >= -NONNEG_TOL


def require_stochastic(M, tol: float = STOCH_TOL) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    if not is_column_stochastic(M, tol):
        raise InputError(f"matrix is not column-stochastic (column-sum error "
                         f"{stochastic_error(M):.3g}, min entry {M.min():.3g})")
    return M


def clean_stochastic(M, support=None) -> tuple[np.ndarray, float]:
    """Clip to [0, 1] on the support, renormalize columns, report the change."""
    M = np.asarray(M, dtype=float)
    out = np.clip(M, 0.0, 1.0)
    if support is not None:
        out = np.where(np.asarray(support, dtype=bool), out, 0.0)
    sums = out.sum(axis=0)
    bad = sums <= 0.0
    if np.any(bad):
        raise InputError("a column has no mass left after clipping")
    out = out / sums
    return out, float(np.max(np.abs(out - M), initial=0.0))


@dataclass(frozen=True, eq=False)
class MarkovPlan:
    """Transition matrices and the density trajectory they induce.

    ``matrices[s][t]`` is ``M^s(t)`` for ``t = 0..horizon-1``; a time-invariant
    plan stores a single matrix per sub-swarm.  ``densities[s]`` has shape
    ``(horizon + 1, n_r)``.  ``loop`` is the loop index ``l`` in ``1..horizon``:
    the trajectory repeats with period ``horizon - l + 1`` and
    ``x(horizon) = x(l - 1)``.
    """

    matrices: tuple
    densities: tuple
    horizon: int
    loop: int | None = None
    time_invariant: bool = False
    adjustment: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def n_r(self) -> int:
        return self.densities[0].shape[1]

    @property
    def period(self) -> int | None:
        return None if self.loop is None else self.horizon - self.loop + 1

    def matrix_index(self, t: int) -> int:
        """Index into the stored sequence for step ``t`` (periodic past the horizon)."""
        if self.time_invariant:
            return 0
        if t < self.horizon:
            return t
        if self.loop is None:
            raise InputError(f"step {t} is past the horizon of a non-periodic plan")
        return self.loop - 1 + (t - self.horizon) % self.period

    def matrix(self, s: int, t: int) -> np.ndarray:
        return self.matrices[s][self.matrix_index(t)]

    def density(self, s: int, t: int) -> np.ndarray:
        """Planned density at any ``t >= 0`` (periodic continuation or replay)."""
        T = self.densities[s].shape[0] - 1
        if t <= T:
            return self.densities[s][t]
        if self.loop is not None and not self.time_invariant:
            return self.densities[s][self.loop - 1 + (t - self.loop + 1) % self.period]
        x = self.densities[s][T]
        for k in range(T, t):
            x = self.matrix(s, k) @ x
        return x

    def validate(self, graph: LabeledGraph | None = None, tol: float = STOCH_TOL) -> None:
        for s, seq in enumerate(self.matrices):
            for t, M in enumerate(seq):
                require_stochastic(M, tol)
                if graph is not None:
                    bad = (np.abs(M) > NONNEG_TOL) & ~graph.support(s)
                    if bad.any():
                        i, j = map(int, np.argwhere(bad)[0])
                        raise InputError(f"M^{s}({t}) moves mass {j}->{i} without an edge")
        if self.loop is not None:
            if not 1 <= self.loop <= self.horizon:
                raise InputError(f"loop index {self.loop} outside 1..{self.horizon}")


def replay(x0: Sequence[np.ndarray], matrices: Sequence[Sequence[np.ndarray]],
           steps: int) -> list[np.ndarray]:
    """Densities ``x(0..steps)`` under ``x(t+1) = M(t) x(t)`` (last matrix repeats)."""
    out = []
    for s, x in enumerate(x0):
        traj = [np.asarray(x, dtype=float)]
        for t in range(steps):
            M = matrices[s][min(t, len(matrices[s]) - 1)]
            traj.append(M @ traj[-1])
        out.append(np.array(traj))
    return out

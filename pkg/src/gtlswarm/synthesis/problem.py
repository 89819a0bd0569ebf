"""Problem, cost and result types shared by every synthesis path."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core.graph import InputError, LabeledGraph
from ..core.plan import MarkovPlan, check_density
from ..gtl.formula import Formula, label_dim

SUCCESS = "success"
INFEASIBLE = "infeasible"
INACCURATE = "inaccurate-local-solution"
TIMEOUT = "timeout"
STATUSES = (SUCCESS, INFEASIBLE, INACCURATE, TIMEOUT)


@dataclass
class Cost:
    """Linear cost over densities and matrix entries.

    ``density[s]`` has shape ``(n_r,)`` (same weights at every time) or
    ``(horizon + 1, n_r)``; ``matrix[s]`` has shape ``(n_r, n_r)`` and weighs
    every ``M^s(t)``.  ``loop`` adds ``sum_j (j + 1) l_j``.
    """

    density: list | None = None
    matrix: list | None = None
    loop: bool = False

    def density_weights(self, s: int, t: int, n_r: int) -> np.ndarray | None:
        if self.density is None or self.density[s] is None:
            return None
        w = np.asarray(self.density[s], dtype=float)
        if w.ndim == 1:
            return w
        return w[t] if t < w.shape[0] else None

    def matrix_weights(self, s: int) -> np.ndarray | None:
        if self.matrix is None or self.matrix[s] is None:
            return None
        return np.asarray(self.matrix[s], dtype=float)

    @property
    def is_zero(self) -> bool:
        dens = self.density is None or all(d is None or not np.any(d) for d in self.density)
        mat = self.matrix is None or all(c is None or not np.any(c) for c in self.matrix)
        return dens and mat and not self.loop

    @property
    def uses_matrices(self) -> bool:
        return self.matrix is not None and any(c is not None and np.any(c) for c in self.matrix)


@dataclass
class ReachAvoidSpec:
    """Stationary targets, stacked safety rows and convergence weights.

    ``safety`` holds ``(A, b)`` pairs over the stacked densities
    ``[x^1; ...; x^m]``; rows from ``G(atom)`` specifications are added on top.
    """

    targets: list
    safety: list = field(default_factory=list)
    weights: list | None = None

    def weight(self, s: int) -> float:
        return 1.0 if self.weights is None else float(self.weights[s])


@dataclass
class TrustRegionParams:
    lam: float = 10.0
    r_min: float = 1e-4
    r_exp: float = 1.5
    r_con: float = 1.5
    eps_tol: float = 1e-6
    eps_acc: float = 1e-6
    r0: float = 2.0
    norm: str = "inf"
    max_iter: int = 200

    def __post_init__(self):
        for name in ("lam", "r_min", "eps_tol", "eps_acc", "r0"):
            if not getattr(self, name) > 0:
                raise InputError(f"trust-region parameter {name} must be positive")
        if not self.r_min < 1:
            raise InputError("r_min must be below 1")
        if not (self.r_exp > 1 and self.r_con > 1):
            raise InputError("r_exp and r_con must exceed 1")
        if self.norm not in ("inf", "1"):
            raise InputError("norm must be 'inf' or '1'")


@dataclass
class SynthesisProblem:
    graph: LabeledGraph
    x0: list
    specs: list = field(default_factory=list)  # (formula, nodes) pairs
    horizon: int = 5
    cost: Cost = field(default_factory=Cost)
    reach_avoid: ReachAvoidSpec | None = None
    name: str = "problem"

    def __post_init__(self):
        g = self.graph
        if len(self.x0) != g.m:
            raise InputError(f"expected {g.m} initial densities, got {len(self.x0)}")
        self.x0 = [check_density(np.asarray(x, dtype=float), what=f"x^{s}(0)")
                   for s, x in enumerate(self.x0)]
        for x in self.x0:
            if x.shape != (g.n_r,):
                raise InputError(f"initial density has shape {x.shape}, expected ({g.n_r},)")
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        specs = []
        for phi, nodes in self.specs:
            d = label_dim(phi)
            if d is not None and d != g.d:
                raise InputError(f"formula atoms have dimension {d}, labels have {g.d}")
            specs.append((phi, [g.node_index(v) for v in nodes]))
        self.specs = specs

    def with_horizon(self, horizon: int) -> "SynthesisProblem":
        return SynthesisProblem(self.graph, self.x0, self.specs, horizon, self.cost,
                                self.reach_avoid, self.name)


@dataclass
class Iteration:
    radius: float
    cost: float
    accuracy: float
    ratio: float
    accepted: bool
    delta_cost: float


@dataclass
class SolverDiagnostics:
    iterations: list = field(default_factory=list)
    eps_bil: float | None = None
    wall_time: float = 0.0
    initial_accuracy: float | None = None
    rates: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def log(self, **kw) -> None:
        self.iterations.append(Iteration(**kw))


@dataclass
class SynthesisResult:
    status: str
    path: str
    plan: MarkovPlan | None = None
    diagnostics: SolverDiagnostics = field(default_factory=SolverDiagnostics)
    verdict: bool | None = None
    objective: float | None = None
    certificate: dict | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


def as_specs(pairs: Sequence[tuple[Formula, Sequence]]) -> list:
    return [(phi, list(nodes)) for phi, nodes in pairs]

"""LP/MILP modelling and solver engines.

Three engines are available: ``"highs"`` (HiGHS via scipy, the default),
``"builtin"`` (bounded revised simplex plus branch-and-bound, in-package) and
``"external"`` (any LP-file solver run as a subprocess).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import bnb, highs, simplex
from .external import ExternalSolverError, solve_external
from .lpfile import format_lp, parse_lp, read_lp, read_solution, write_lp
from .model import (FEAS_TOL, INFEASIBLE, INT_TOL, ITERATION_LIMIT, NUMERICAL,
                    OPTIMAL, TIME_LIMIT, UNBOUNDED, LinExpr, Model, ModelError,
                    Solution)

ENGINES = ("highs", "builtin", "external")


@dataclass(frozen=True)
class SolverConfig:
    engine: str = "highs"
    command: str | None = None
    gap: float = 1e-6

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {ENGINES}")


DEFAULT = SolverConfig()


def solve_lp(model: Model, config: SolverConfig | None = None,
             time_limit: float | None = None) -> Solution:
    config = config or DEFAULT
    if model.num_binaries:
        raise ValueError("solve_lp called on a model with binary variables")
    if config.engine == "builtin":
        return simplex.solve_lp(model, time_limit=time_limit)
    if config.engine == "external":
        return solve_external(model, config.command, time_limit)
    return highs.solve_lp(model, time_limit=time_limit)


def solve_milp(model: Model, config: SolverConfig | None = None,
               time_limit: float | None = None, gap: float | None = None) -> Solution:
    config = config or DEFAULT
    gap = config.gap if gap is None else gap
    if config.engine == "builtin":
        if not model.num_binaries:
            return simplex.solve_lp(model, time_limit=time_limit)
        return bnb.solve_milp(model, time_limit=time_limit, gap=gap)
    if config.engine == "external":
        return solve_external(model, config.command, time_limit)
    return highs.solve_milp(model, time_limit=time_limit, gap=gap)


def solve(model: Model, config: SolverConfig | None = None,
          time_limit: float | None = None) -> Solution:
    if model.num_binaries:
        return solve_milp(model, config, time_limit)
    return solve_lp(model, config, time_limit)


__all__ = [
    "FEAS_TOL", "INT_TOL", "INFEASIBLE", "ITERATION_LIMIT", "NUMERICAL", "OPTIMAL",
    "TIME_LIMIT", "UNBOUNDED", "LinExpr", "Model", "ModelError", "Solution",
    "SolverConfig", "ExternalSolverError", "solve", "solve_lp", "solve_milp",
    "solve_external", "format_lp", "parse_lp", "read_lp", "write_lp", "read_solution",
]

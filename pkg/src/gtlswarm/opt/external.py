"""Run an external solver through LP/solution files.

The command template may use ``{lp}``, ``{sol}`` and ``{time_limit}``
placeholders, e.g. ``cbc {lp} solve solu {sol}``.  When no template is
passed, the ``GTLSWARM_SOLVER`` environment variable is used.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .lpfile import read_solution, sanitize_names, write_lp
from .model import FEAS_TOL, INT_TOL, NUMERICAL, OPTIMAL, TIME_LIMIT, Model, Solution

ENV_VAR = "GTLSWARM_SOLVER"


class ExternalSolverError(RuntimeError):
    pass


def default_command() -> str | None:
    return os.environ.get(ENV_VAR) or None


def solve_external(model: Model, command: str | None = None,
                   time_limit: float | None = None, tol: float = 1e-6) -> Solution:
    command = command or default_command()
    if not command:
        raise ExternalSolverError(f"no solver command given and {ENV_VAR} is unset")
    names = sanitize_names(model.names)
    with tempfile.TemporaryDirectory(prefix="gtlswarm-") as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        write_lp(model, lp)
        argv = [a.format(lp=lp, sol=sol, time_limit=time_limit if time_limit else 1e9)
                for a in shlex.split(command)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=None if time_limit is None else time_limit + 30)
        except subprocess.TimeoutExpired:
            return Solution(TIME_LIMIT, message="external solver timed out")
        except OSError as exc:
            raise ExternalSolverError(f"cannot run {argv[0]!r}: {exc}") from exc
        if not sol.exists():
            return Solution(NUMERICAL, message=f"no solution file (exit {proc.returncode}): "
                            + proc.stderr.strip()[-500:])
        status, values = read_solution(sol, names)
    if not values:
        return Solution(status or NUMERICAL, message="solution file holds no values")
    x = np.array([values.get(n, 0.0) for n in names])
    b = np.array(model.binary, dtype=bool)
    if b.any() and np.max(np.abs(x[b] - np.round(x[b]))) <= INT_TOL:
        x[b] = np.round(x[b])
    viol = model.max_violation(x)
    if status in (None, OPTIMAL) and viol > max(tol, FEAS_TOL):
        return Solution(NUMERICAL, x=x, message=f"external point violates rows by {viol:.3g}")
    return Solution(status or OPTIMAL, x=x, objective=model.objective_value(x))

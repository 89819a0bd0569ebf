"""Route a problem to the cheapest synthesis path that applies."""

from __future__ import annotations

from ..core.graph import InputError, is_complete, is_scrambling
from ..opt import SolverConfig
from . import complete, general, reach_avoid
from .problem import SynthesisProblem, SynthesisResult, TrustRegionParams

PATHS = {
    "lp": reach_avoid.LP_PATH,
    "spectral": reach_avoid.SPECTRAL_PATH,
    "complete": complete.PATH,
    "general": general.PATH,
}


def choose_path(problem: SynthesisProblem) -> str:
    adj = problem.graph.adjacency
    if reach_avoid.is_reach_avoid(problem):
        return "lp" if all(is_scrambling(a) for a in adj) else "spectral"
    if problem.reach_avoid is not None:
        raise InputError("reach-avoid problems only admit G(atom) safety formulas")
    return "complete" if all(is_complete(a) for a in adj) else "general"


def gtlproco_dispatch(problem: SynthesisProblem, path: str = "auto",
                      params: TrustRegionParams | None = None,
                      config: SolverConfig | None = None,
                      time_limit: float | None = None) -> SynthesisResult:
    if path == "auto":
        path = choose_path(problem)
    if path not in PATHS:
        raise InputError(f"unknown path {path!r}; choose auto or one of {sorted(PATHS)}")
    if path == "lp":
        return reach_avoid.synthesize_reach_avoid_lp(problem, config, time_limit)
    if path == "spectral":
        return reach_avoid.synthesize_reach_avoid_spectral(problem, config, time_limit)
    if path == "complete":
        return complete.synthesize_complete_graph(problem, config, time_limit)
    return general.synthesize_general(problem, params, config, time_limit)

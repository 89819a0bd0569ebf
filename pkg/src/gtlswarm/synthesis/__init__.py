"""Markov-plan synthesis: reach-avoid LP, spectral rate descent, complete-graph
MILP and trust-region sequential MILP, plus the dispatcher choosing among them."""

from .builder import PlanModel, bilinear_error
from .complete import extract_rank_one, monitor_verdict, synthesize_complete_graph
from .dispatch import PATHS, choose_path, gtlproco_dispatch
from .general import (Infeasible, initial_iterate, linearized_model, mccormick_initialize,
                      mccormick_model, recover_markov, synthesize_general)
from .problem import (INACCURATE, INFEASIBLE, STATUSES, SUCCESS, TIMEOUT, Cost,
                      ReachAvoidSpec, SolverDiagnostics, SynthesisProblem, SynthesisResult,
                      TrustRegionParams)
from .reach_avoid import (certificate_residual, is_reach_avoid, reach_avoid_model,
                          safety_polytope,
                          synthesize_reach_avoid_lp, synthesize_reach_avoid_spectral)

__all__ = [
    "PlanModel", "bilinear_error", "extract_rank_one", "monitor_verdict",
    "synthesize_complete_graph", "PATHS", "choose_path", "gtlproco_dispatch", "Infeasible",
    "initial_iterate", "linearized_model", "mccormick_initialize", "mccormick_model", "recover_markov", "synthesize_general",
    "INACCURATE", "INFEASIBLE", "STATUSES", "SUCCESS", "TIMEOUT", "Cost", "ReachAvoidSpec",
    "SolverDiagnostics", "SynthesisProblem", "SynthesisResult", "TrustRegionParams",
    "certificate_residual", "is_reach_avoid", "reach_avoid_model", "safety_polytope",
    "synthesize_reach_avoid_lp", "synthesize_reach_avoid_spectral",
]

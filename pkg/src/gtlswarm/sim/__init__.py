"""Decentralized execution of Markov plans by finite agent populations."""

from .population import AgentPopulation, largest_remainder, step_agents, uniform_draws
from .run import TRACE_HEADER, SimulationTrace, quantization_slack, run_simulation

__all__ = ["AgentPopulation", "largest_remainder", "step_agents", "uniform_draws",
           "TRACE_HEADER", "SimulationTrace", "quantization_slack", "run_simulation"]

from .count import binary_budget, predict_binaries
from .encoder import (ENF, NEG, POS, ConstraintSystem, choose_bigM, encode_formula,
                      encode_loop, loop_bigM)

__all__ = ["binary_budget", "predict_binaries", "ENF", "NEG", "POS", "ConstraintSystem",
           "choose_bigM", "encode_formula", "encode_loop", "loop_bigM"]
from .check import SolverVerdictError, encoder_verdict, pinned_encoding

__all__ += ["SolverVerdictError", "encoder_verdict", "pinned_encoding"]

from .bruteforce import brute_force_satisfiable, simplex_grid
from .formula import (DELTA, FALSE, TRUE, Always, AlwaysEventually, And, Atom, Const,
                      Eventually, EventuallyAlways, ExistsN, Formula, Next, Not, Or,
                      Until, atom, compare, conj, disj, label_dim, temporal_depth)
from .monitor import (ATOM_TOL, EvaluationError, GraphTrajectory, evaluate,
                      evaluate_all, evaluate_unrolled, truth_table, unroll_bound)
from .parser import DimensionError, FormulaSyntaxError, parse_formula
from .printer import to_text

__all__ = [
    "brute_force_satisfiable", "simplex_grid", "DELTA", "FALSE", "TRUE", "Always",
    "AlwaysEventually", "And", "Atom", "Const", "Eventually", "EventuallyAlways",
    "ExistsN", "Formula", "Next", "Not", "Or", "Until", "atom", "compare", "conj",
    "disj", "label_dim", "temporal_depth", "ATOM_TOL", "EvaluationError",
    "GraphTrajectory", "evaluate", "evaluate_all", "evaluate_unrolled", "truth_table",
    "unroll_bound", "DimensionError", "FormulaSyntaxError", "parse_formula", "to_text",
]

from .graph import (AffineLabel, InputError, LabeledGraph, density_labels,
                    is_complete, is_scrambling, is_strongly_connected, neighbor_set,
                    ring_adjacency)
from .plan import (NONNEG_TOL, STOCH_TOL, DensityState, MarkovPlan, check_density,
                   clean_stochastic, is_column_stochastic, replay, require_stochastic,
                   stochastic_error)
from .spectral import (centered_similarity, ergodicity_coefficient,
                       reversibilization_rate, reversibilization_rate_eig,
                       second_eigenvalue_modulus, stationary_distribution)

__all__ = [
    "AffineLabel", "InputError", "LabeledGraph", "density_labels", "is_complete",
    "is_scrambling", "is_strongly_connected", "neighbor_set", "ring_adjacency",
    "NONNEG_TOL", "STOCH_TOL", "DensityState", "MarkovPlan", "check_density",
    "clean_stochastic", "is_column_stochastic", "replay", "require_stochastic",
    "stochastic_error", "centered_similarity", "ergodicity_coefficient",
    "reversibilization_rate", "reversibilization_rate_eig",
    "second_eigenvalue_modulus", "stationary_distribution",
]

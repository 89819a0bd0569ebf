"""Finite agent populations stepped by inverse-CDF sampling of plan columns."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..core.graph import InputError
from ..core.plan import STOCH_TOL, check_density, stochastic_error


def largest_remainder(x, n: int) -> np.ndarray:
    """Integer counts summing to ``n`` closest to ``n * x`` (ties to the lower bin)."""
    x = check_density(x)
    if n < 1:
        raise InputError("agent count must be positive")
    raw = n * x
    counts = np.floor(raw).astype(np.int64)
    short = n - int(counts.sum())
    order = sorted(range(len(x)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def uniform_draws(seed: int, s: int, t: int, n: int) -> np.ndarray:
    """``u[a]`` for agent ``a`` of sub-swarm ``s`` at step ``t``.

    A counter-based generator keyed by ``(seed, s, t)`` makes every agent's
    draw a fixed function of its identity, independent of how the population
    is partitioned or scheduled.
    """
    bitgen = np.random.Philox(np.random.SeedSequence([seed, s, t]))
    return np.random.Generator(bitgen).random(n)


@dataclass
class AgentPopulation:
    """Bin index of every agent, one array per sub-swarm."""

    bins: list
    n_r: int
    meta: dict = field(default_factory=dict)

    @classmethod
    def place(cls, x0: Sequence, agents: Sequence[int]) -> "AgentPopulation":
        bins = []
        for x, n in zip(x0, agents):
            counts = largest_remainder(x, int(n))
            bins.append(np.repeat(np.arange(len(counts)), counts))
        return cls(bins, len(x0[0]))

    @property
    def sizes(self) -> list[int]:
        return [len(b) for b in self.bins]

    def counts(self, s: int) -> np.ndarray:
        return np.bincount(self.bins[s], minlength=self.n_r)

    def density(self, s: int) -> np.ndarray:
        return self.counts(s) / len(self.bins[s])


def _cdf(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    cdf = np.cumsum(M, axis=0)
    for i in range(n):
        last = int(np.flatnonzero(M[:, i] > 0)[-1])
        cdf[last:, i] = 1.0  # absorb rounding of the last positive entry
    return cdf


def step_agents(bins: np.ndarray, M, u: np.ndarray,
                avoid: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Each agent in bin ``i`` draws its next bin from column ``i`` of ``M``.

    ``avoid`` receives (current, proposed) bins and may return adjusted
    proposals; the default keeps the proposals unchanged.
    """
    M = np.asarray(M, dtype=float)
    if stochastic_error(M) > STOCH_TOL or M.min() < 0:
        raise InputError("refusing to step with a matrix that is not column-stochastic")
    cdf = _cdf(M)
    out = np.empty_like(bins)
    for i in np.unique(bins):
        idx = np.flatnonzero(bins == i)
        last = int(np.flatnonzero(M[:, i] > 0)[-1])
        # u = 1 closes the last interval
        out[idx] = np.minimum(np.searchsorted(cdf[:, i], u[idx], side="right"), last)
    if avoid is not None:
        out = avoid(bins, out)
    return out

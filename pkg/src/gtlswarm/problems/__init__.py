"""Bundled example problems."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..core.graph import AffineLabel, LabeledGraph
from ..gtl.parser import parse_formula
from ..synthesis.problem import SynthesisProblem

HERE = Path(__file__).parent
TOY_ADJACENCY = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])


def toy_problem(horizon: int = 2) -> SynthesisProblem:
    """Three bins, two sub-swarms, ``X G (y = 0)`` at the first two bins."""
    labels = [
        AffineLabel([[[1, 0, 0]], [[1, 0, 0]]]),
        AffineLabel([[[0, -2, 0]], [[0, 1, 0]]]),
        AffineLabel([[[0, 0, 1]], [[0, 0, 0]]]),
    ]
    g = LabeledGraph([TOY_ADJACENCY, TOY_ADJACENCY], labels, ["v1", "v2", "v3"])
    phi = parse_formula("X G (y = 0)")
    return SynthesisProblem(g, [[0.3, 0.3, 0.4], [0.3, 0.4, 0.3]], [(phi, [0, 1])],
                            horizon=horizon, name="toy")


def path(name: str) -> Path:
    """Location of a shipped problem file, e.g. ``path("toy")``."""
    p = HERE / f"{name}.yaml"
    if not p.exists():
        known = sorted(q.stem for q in HERE.glob("*.yaml"))
        raise FileNotFoundError(f"no bundled problem {name!r}; available: {known}")
    return p

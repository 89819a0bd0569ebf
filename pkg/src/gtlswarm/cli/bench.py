"""Seeded random benchmark instances and the harness that runs them."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core.graph import LabeledGraph, is_complete
from ..encoding.count import predict_binaries
from ..gtl.formula import Always, Eventually, Formula, compare, conj, disj
from ..opt import OPTIMAL, SolverConfig, solve_milp
from ..synthesis.builder import PlanModel
from ..synthesis.complete import synthesize_complete_graph
from ..synthesis.general import synthesize_general
from ..synthesis.problem import Cost, SynthesisProblem, TrustRegionParams

SIZES = (5, 10, 15, 20)
HORIZONS = (5, 6, 7, 8)
RESULT_HEADER = ("instance", "seed", "n_r", "horizon", "binaries", "path", "status",
                 "verdict", "eps_bil", "objective", "iterations")
TIMING_HEADER = ("instance", "engine", "wall_time")


def random_adjacency(rng: np.random.Generator, n: int, lo: int = 2, hi: int = 5) -> np.ndarray:
    """Self-loop plus random successors; every out-degree lies in ``[lo, hi]``."""
    a = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        deg = int(rng.integers(lo, min(hi, n) + 1))
        others = rng.choice([j for j in range(n) if j != i], size=deg - 1, replace=False)
        a[i, i] = 1
        a[i, others] = 1
    return a


def _random_atom(rng: np.random.Generator):
    if rng.random() < 0.5:
        return compare("<=", (round(float(rng.uniform(0.3, 0.9)), 3),))
    return compare(">=", (round(float(rng.uniform(0.02, 0.25)), 3),))


def random_formula(rng: np.random.Generator) -> Formula:
    """Conjunction of one to three terms built from and, or, always, eventually."""
    terms = []
    for _ in range(int(rng.integers(1, 4))):
        kind = int(rng.integers(4))
        if kind == 0:
            terms.append(Always(_random_atom(rng)))
        elif kind == 1:
            terms.append(Eventually(_random_atom(rng)))
        elif kind == 2:
            terms.append(Always(disj(_random_atom(rng), _random_atom(rng))))
        else:
            terms.append(Eventually(conj(_random_atom(rng), _random_atom(rng))))
    return conj(*terms)


def encoding_feasible(problem: SynthesisProblem, config: SolverConfig | None = None) -> bool:
    """Feasibility of the formula rows alone (no dynamics)."""
    pm = PlanModel(problem, "precheck")
    sol = solve_milp(pm.model, config, time_limit=30.0)
    return sol.status == OPTIMAL


def random_instance(seed: int, n: int, horizon: int, tries: int = 50) -> SynthesisProblem:
    rng = np.random.default_rng([seed, n, horizon])
    graph = LabeledGraph([random_adjacency(rng, n)])
    x0 = rng.dirichlet(np.ones(n))
    for _ in range(tries):
        phi = random_formula(rng)
        nodes = sorted(rng.choice(n, size=int(rng.integers(1, 4)), replace=False).tolist())
        p = SynthesisProblem(graph, [x0], [(phi, nodes)], horizon, Cost(loop=True),
                             name=f"bench-{seed}-{n}-{horizon}")
        if encoding_feasible(p):
            return p
    raise RuntimeError("no feasible random specification found")


@dataclass
class BenchConfig:
    instances: int = 40
    seed: int = 0
    sizes: tuple = SIZES
    horizons: tuple = HORIZONS
    time_limit: float = 120.0
    workers: int = 1
    external: str | None = None
    engine: str = "highs"
    params: TrustRegionParams | None = None

    def grid(self) -> list[tuple[int, int, int]]:
        """(instance id, n_r, horizon) triples cycling through the paired sweeps."""
        out = []
        for idx in range(self.instances):
            n = self.sizes[idx % len(self.sizes)]
            k = self.horizons[(idx // len(self.sizes)) % len(self.horizons)]
            out.append((idx, n, k))
        return out


def _run_one(args):
    idx, n, k, cfg = args
    row = {"instance": idx, "seed": cfg.seed, "n_r": n, "horizon": k}
    timing = []
    try:
        p = random_instance(cfg.seed * 100_003 + idx, n, k)
        phi, nodes = p.specs[0]
        row["binaries"] = predict_binaries(p.graph, phi, nodes, k)
        t0 = time.perf_counter()
        solver = SolverConfig(cfg.engine)
        if all(is_complete(a) for a in p.graph.adjacency):
            res = synthesize_complete_graph(p, solver, time_limit=cfg.time_limit)
        else:
            res = synthesize_general(p, cfg.params, solver, time_limit=cfg.time_limit)
        timing.append((idx, cfg.engine, time.perf_counter() - t0))
        row.update(path=res.path, status=res.status, verdict=res.verdict,
                   eps_bil=res.diagnostics.eps_bil, objective=res.objective,
                   iterations=len(res.diagnostics.iterations))
        if cfg.external:
            t0 = time.perf_counter()
            synthesize_general(p, cfg.params, SolverConfig("external", cfg.external),
                               time_limit=cfg.time_limit)
            timing.append((idx, "external", time.perf_counter() - t0))
    except Exception as exc:  # recorded, the harness keeps going
        row.update(status=f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
    return row, timing


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_bench(cfg: BenchConfig) -> tuple[str, str]:
    """Results CSV (deterministic) and the wall-time CSV kept beside it."""
    jobs = [(idx, n, k, cfg) for idx, n, k in cfg.grid()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            out = list(pool.map(_run_one, jobs))
    else:
        out = [_run_one(j) for j in jobs]
    res, tim = io.StringIO(), io.StringIO()
    w = csv.writer(res, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    wt = csv.writer(tim, lineterminator="\n")
    wt.writerow(TIMING_HEADER)
    for row, timing in sorted(out, key=lambda r: r[0]["instance"]):
        w.writerow([_fmt(row.get(h)) for h in RESULT_HEADER])
        for t in timing:
            wt.writerow([t[0], t[1], f"{t[2]:.6f}"])
    return res.getvalue(), tim.getvalue()

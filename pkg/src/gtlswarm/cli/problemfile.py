"""YAML problem and solution files.

Problem schema (keys in brackets are optional)::

    name: str
    nodes: [str, ...]
    adjacency:            # one mapping per sub-swarm: node -> successors
      - {v1: [v1, v2], ...}
    [labels]:             # node -> {coeffs: [d x n_r block per sub-swarm], [offset]: [d]}
                          # default: f_i = (x^1_i, ..., x^m_i)
    initial: [[...], ...] # one density per sub-swarm (list, or node -> value mapping)
    [specs]:
      - {formula: str, nodes: [str, ...]}
    horizon: int
    [cost]: {[density]: per sub-swarm n_r list or (k+1) x n_r table,
             [matrix]: per sub-swarm n_r x n_r table, [loop]: bool}
    [reach_avoid]: {targets: [[...], ...], [weights]: [...],
                    [safety]: [{A: [[...]], b: [...]}]}
    [solver]: {[engine], [path], [time_limit], [trust_region]: {lam, r_min, ...}}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..core.graph import AffineLabel, InputError, LabeledGraph
from ..core.plan import MarkovPlan
from ..gtl.parser import DimensionError, FormulaSyntaxError, parse_formula
from ..gtl.printer import to_text
from ..synthesis.problem import Cost, ReachAvoidSpec, SynthesisProblem, TrustRegionParams


class ProblemFileError(InputError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class LoadedProblem:
    problem: SynthesisProblem
    raw: dict
    digest: str
    solver: dict = field(default_factory=dict)


def content_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(canon.encode()).hexdigest()


def _density_list(val, names: list[str], where: str) -> list[float]:
    if isinstance(val, dict):
        unknown = set(val) - set(names)
        if unknown:
            raise InputError(f"{where}: unknown node {sorted(unknown)[0]!r}")
        return [float(val.get(v, 0.0)) for v in names]
    if not isinstance(val, list) or len(val) != len(names):
        raise InputError(f"{where}: expected {len(names)} values")
    return [float(v) for v in val]


def _graph(raw: dict, errors: list[str]) -> LabeledGraph | None:
    names = raw.get("nodes")
    if not isinstance(names, list) or not names:
        errors.append("nodes: a non-empty list of node names is required")
        return None
    names = [str(v) for v in names]
    index = {v: i for i, v in enumerate(names)}
    adj_raw = raw.get("adjacency")
    if not isinstance(adj_raw, list) or not adj_raw:
        errors.append("adjacency: one successor mapping per sub-swarm is required")
        return None
    n = len(names)
    adjs = []
    for s, spec in enumerate(adj_raw):
        a = np.zeros((n, n), dtype=np.int8)
        if not isinstance(spec, dict):
            errors.append(f"adjacency[{s}]: expected a mapping node -> successors")
            continue
        for src, succ in spec.items():
            if str(src) not in index:
                errors.append(f"adjacency[{s}]: unknown node {src!r}")
                continue
            for dst in succ or []:
                if str(dst) not in index:
                    errors.append(f"adjacency[{s}].{src}: unknown successor {dst!r}")
                    continue
                a[index[str(src)], index[str(dst)]] = 1
        adjs.append(a)
    if errors:
        return None
    m = len(adjs)
    labels = None
    if raw.get("labels") is not None:
        lab_raw = raw["labels"]
        labels = []
        for v in names:
            if v not in lab_raw:
                errors.append(f"labels: node {v!r} has no label")
                continue
            entry = lab_raw[v]
            try:
                coeffs = [np.asarray(c, dtype=float) for c in entry["coeffs"]]
                if len(coeffs) != m:
                    raise InputError(f"expected {m} coefficient blocks")
                labels.append(AffineLabel(coeffs, entry.get("offset")))
            except (InputError, KeyError, TypeError, ValueError) as exc:
                errors.append(f"labels.{v}: {exc}")
        if errors:
            return None
    try:
        return LabeledGraph(adjs, labels, names)
    except InputError as exc:
        errors.append(f"graph: {exc}")
        return None


def _initial(names: list[str], m: int, init, errors: list[str]) -> list[np.ndarray]:
    x0 = []
    if not isinstance(init, list) or len(init) != m:
        errors.append(f"initial: expected one density per sub-swarm ({m})")
        return x0
    for s, val in enumerate(init):
        try:
            x = np.array(_density_list(val, names, f"initial[{s}]"))
            if np.any(x < -1e-9):
                raise InputError(f"initial[{s}]: negative entry {x.min():.6g}")
            if abs(x.sum() - 1.0) > 1e-9:
                raise InputError(f"initial[{s}]: densities sum to {x.sum():.12g}, not 1")
            x0.append(x)
        except InputError as exc:
            errors.append(str(exc))
    return x0


def problem_from_dict(raw: dict, horizon: int | None = None) -> LoadedProblem:
    if not isinstance(raw, dict):
        raise ProblemFileError(["top level: expected a mapping"])
    errors: list[str] = []
    graph = _graph(raw, errors)
    if graph is None:
        # report density problems alongside the graph errors
        nodes, adj = raw.get("nodes"), raw.get("adjacency")
        if isinstance(nodes, list) and isinstance(adj, list):
            _initial([str(v) for v in nodes], len(adj), raw.get("initial"), errors)
        raise ProblemFileError(errors)
    names = list(graph.names)
    x0 = _initial(names, graph.m, raw.get("initial"), errors)
    specs = []
    for n, sp in enumerate(raw.get("specs") or []):
        where = f"specs[{n}]"
        try:
            phi = parse_formula(str(sp["formula"]), dim=graph.d)
        except (FormulaSyntaxError, DimensionError) as exc:
            errors.append(f"{where}.formula: {exc}")
            continue
        except (KeyError, TypeError):
            errors.append(f"{where}: needs a formula")
            continue
        nodes = []
        for v in sp.get("nodes") or []:
            if str(v) not in names:
                errors.append(f"{where}.nodes: unknown node {v!r}")
            else:
                nodes.append(names.index(str(v)))
        specs.append((phi, nodes))
    k = horizon if horizon is not None else raw.get("horizon")
    if not isinstance(k, int) or k < 1:
        errors.append("horizon: a positive integer is required")
    cost = Cost()
    craw = raw.get("cost") or {}
    try:
        dens = craw.get("density")
        mat = craw.get("matrix")
        cost = Cost(density=None if dens is None else [None if d is None else np.asarray(d, float)
                                                       for d in dens],
                    matrix=None if mat is None else [None if c is None else np.asarray(c, float)
                                                     for c in mat],
                    loop=bool(craw.get("loop", False)))
        for s, d in enumerate(cost.density or []):
            if d is not None and d.shape[-1] != graph.n_r:
                raise InputError(f"cost.density[{s}] has {d.shape[-1]} columns")
        for s, c in enumerate(cost.matrix or []):
            if c is not None and c.shape != (graph.n_r, graph.n_r):
                raise InputError(f"cost.matrix[{s}] has shape {c.shape}")
    except (InputError, TypeError, ValueError, AttributeError) as exc:
        errors.append(f"cost: {exc}")
    ra = None
    if raw.get("reach_avoid") is not None:
        r = raw["reach_avoid"]
        try:
            targets = [_density_list(t, names, f"reach_avoid.targets[{s}]")
                       for s, t in enumerate(r["targets"])]
            if len(targets) != graph.m:
                raise InputError(f"reach_avoid.targets: expected {graph.m} distributions")
            safety = [(np.asarray(row["A"], float), np.asarray(row["b"], float))
                      for row in r.get("safety") or []]
            ra = ReachAvoidSpec(targets, safety, r.get("weights"))
        except (InputError, KeyError, TypeError, ValueError) as exc:
            errors.append(f"reach_avoid: {exc}")
    solver = dict(raw.get("solver") or {})
    try:
        TrustRegionParams(**(solver.get("trust_region") or {}))
    except (InputError, TypeError) as exc:
        errors.append(f"solver.trust_region: {exc}")
    if errors:
        raise ProblemFileError(errors)
    try:
        problem = SynthesisProblem(graph, x0, specs, k, cost, ra, str(raw.get("name", "problem")))
    except InputError as exc:
        raise ProblemFileError([str(exc)]) from None
    return LoadedProblem(problem, raw, content_hash(raw), solver)


def load_problem(path, horizon: int | None = None) -> LoadedProblem:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ProblemFileError([f"{path}: not valid YAML ({exc})"]) from None
    return problem_from_dict(raw, horizon)


def _matrix_rows(A) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(A)]


def problem_to_dict(problem: SynthesisProblem) -> dict:
    """Inverse of :func:`problem_from_dict` (specs are printed back to text)."""
    g = problem.graph
    names = list(g.names)
    out: dict = {"name": problem.name, "nodes": names, "adjacency": []}
    for a in g.adjacency:
        out["adjacency"].append({names[i]: [names[j] for j in np.flatnonzero(a[i])]
                                 for i in range(g.n_r)})
    out["labels"] = {names[i]: {"coeffs": [_matrix_rows(c) for c in lab.coeffs],
                                "offset": [float(v) for v in lab.offset]}
                     for i, lab in enumerate(g.labels)}
    out["initial"] = [[float(v) for v in x] for x in problem.x0]
    out["specs"] = [{"formula": to_text(phi), "nodes": [names[v] for v in nodes]}
                    for phi, nodes in problem.specs]
    out["horizon"] = int(problem.horizon)
    c = problem.cost
    cost: dict = {"loop": bool(c.loop)}
    if c.density is not None:
        cost["density"] = [None if d is None else np.asarray(d, float).tolist() for d in c.density]
    if c.matrix is not None:
        cost["matrix"] = [None if d is None else _matrix_rows(d) for d in c.matrix]
    out["cost"] = cost
    if problem.reach_avoid is not None:
        ra = problem.reach_avoid
        out["reach_avoid"] = {
            "targets": [[float(v) for v in t] for t in ra.targets],
            "safety": [{"A": _matrix_rows(np.atleast_2d(A)),
                        "b": [float(v) for v in np.ravel(b)]} for A, b in ra.safety],
        }
        if ra.weights is not None:
            out["reach_avoid"]["weights"] = [float(w) for w in ra.weights]
    return out


def dump_yaml(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)


# solutions ---------------------------------------------------------------------

def solution_to_dict(result, digest: str, problem: SynthesisProblem) -> dict:
    d = result.diagnostics
    out: dict = {
        "problem_hash": digest,
        "problem": problem.name,
        "path": result.path,
        "status": result.status,
        "verdict": result.verdict,
        "objective": None if result.objective is None else float(result.objective),
        "eps_bil": None if d.eps_bil is None else float(d.eps_bil),
        "message": result.message,
        "diagnostics": {
            "wall_time": float(d.wall_time),
            "initial_accuracy": None if d.initial_accuracy is None else float(d.initial_accuracy),
            "iterations": [{k: (bool(v) if k == "accepted" else float(v))
                            for k, v in vars(it).items()} for it in d.iterations],
            "notes": list(d.notes),
        },
    }
    if d.rates:
        out["diagnostics"]["rates"] = np.asarray(d.rates, dtype=float).tolist()
    plan = result.plan
    if plan is not None:
        out["plan"] = {
            "horizon": int(plan.horizon),
            "loop": None if plan.loop is None else int(plan.loop),
            "time_invariant": bool(plan.time_invariant),
            "matrices": [[_matrix_rows(M) for M in seq] for seq in plan.matrices],
            "densities": [_matrix_rows(x) for x in plan.densities],
        }
    return out


def plan_from_dict(data: dict) -> MarkovPlan:
    p = data.get("plan")
    if p is None:
        raise InputError("the solution file holds no plan")
    mats = tuple(tuple(np.asarray(M, dtype=float) for M in seq) for seq in p["matrices"])
    dens = tuple(np.asarray(x, dtype=float) for x in p["densities"])
    return MarkovPlan(mats, dens, int(p["horizon"]), p.get("loop"), bool(p["time_invariant"]),
                      meta={"path": data.get("path")})


def load_solution(path) -> dict:
    data = yaml.safe_load(Path(path).read_text())
    if not isinstance(data, dict) or "problem_hash" not in data:
        raise InputError(f"{path}: not a solution file")
    return data

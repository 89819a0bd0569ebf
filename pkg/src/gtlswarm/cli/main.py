"""``gtlswarm`` command line: validate, synthesize, simulate, bench, export-lp."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..core.graph import InputError, is_complete, is_scrambling, is_strongly_connected
from ..opt import SolverConfig
from ..opt.external import ExternalSolverError, default_command
from ..opt.lpfile import format_lp
from ..sim.run import run_simulation
from ..synthesis.complete import PATH as COMPLETE_PATH
from ..synthesis.dispatch import PATHS, choose_path, gtlproco_dispatch
from ..synthesis.general import Infeasible, linearized_model
from ..synthesis.builder import PlanModel
from ..synthesis.problem import (INACCURATE, INFEASIBLE, SUCCESS, TIMEOUT,
                                 TrustRegionParams)
from ..synthesis.reach_avoid import reach_avoid_model
from .bench import BenchConfig, run_bench
from .problemfile import (ProblemFileError, dump_yaml, load_problem, load_solution,
                          plan_from_dict, solution_to_dict)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INACCURATE, EXIT_TIMEOUT = 0, 2, 3, 4, 5
STATUS_EXIT = {SUCCESS: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, INACCURATE: EXIT_INACCURATE,
               TIMEOUT: EXIT_TIMEOUT}

_TR_FLAGS = {"tr_lambda": "lam", "tr_rmin": "r_min", "tr_rexp": "r_exp", "tr_rcon": "r_con",
             "eps_tol": "eps_tol", "eps_acc": "eps_acc"}


def _yn(flag: bool) -> str:
    return "yes" if flag else "no"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _solver(args, loaded) -> SolverConfig:
    cmd = args.external_solver if hasattr(args, "external_solver") else None
    engine = loaded.solver.get("engine", "highs") if loaded is not None else "highs"
    if cmd:
        return SolverConfig("external", cmd)
    if engine == "external":
        return SolverConfig("external", loaded.solver.get("command") or default_command())
    return SolverConfig(engine)


def _params(args, loaded) -> TrustRegionParams:
    kw = dict(loaded.solver.get("trust_region") or {}) if loaded is not None else {}
    for flag, key in _TR_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            kw[key] = val
    return TrustRegionParams(**kw)


def cmd_validate(args) -> int:
    loaded = load_problem(args.problem, args.horizon)
    p = loaded.problem
    g = p.graph
    print(f"{p.name}: valid ({g.n_r} nodes, {g.m} sub-swarm(s), label dim {g.d}, "
          f"horizon {p.horizon}, {len(p.specs)} spec(s))")
    for s, a in enumerate(g.adjacency):
        print(f"  sub-swarm {s}: complete: {_yn(is_complete(a))}, scrambling: "
              f"{_yn(is_scrambling(a))}, strongly connected: {_yn(is_strongly_connected(a))}")
    print(f"  path: {choose_path(p)}")
    print(f"  hash: {loaded.digest}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    loaded = load_problem(args.problem, args.horizon)
    p = loaded.problem
    time_limit = args.time_limit if args.time_limit is not None else loaded.solver.get("time_limit")
    path = args.path or loaded.solver.get("path", "auto")
    res = gtlproco_dispatch(p, path, _params(args, loaded), _solver(args, loaded), time_limit)
    doc = solution_to_dict(res, loaded.digest, p)
    _write(dump_yaml(doc), args.out)
    d = res.diagnostics
    eps = "n/a" if d.eps_bil is None else f"{d.eps_bil:.3g}"
    print(f"status: {res.status}  path: {res.path}  verdict: {res.verdict}  eps_bil: {eps}  "
          f"time: {d.wall_time:.3f}s", file=sys.stderr)
    if res.message:
        print(f"note: {res.message}", file=sys.stderr)
    if args.emit_plot_data and res.plan is not None:
        rows = ["t,sub_swarm,bin,density"]
        for s, x in enumerate(res.plan.densities):
            for t in range(x.shape[0]):
                rows.extend(f"{t},{s},{i},{float(x[t, i])!r}" for i in range(x.shape[1]))
        Path(args.emit_plot_data).write_text("\n".join(rows) + "\n")
    return STATUS_EXIT[res.status]


def _agents(text: str, m: int) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--agents expects integers, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * m
    if len(vals) != m or min(vals) < 1:
        raise InputError(f"--agents needs {m} positive count(s)")
    return vals


def cmd_simulate(args) -> int:
    loaded = load_problem(args.problem)
    sol = load_solution(args.solution)
    if sol["problem_hash"] != loaded.digest:
        raise InputError("solution was computed for a different problem file "
                         f"(hash {sol['problem_hash'][:12]} vs {loaded.digest[:12]})")
    plan = plan_from_dict(sol)
    p = loaded.problem
    trace = run_simulation(p, plan, _agents(args.agents, p.graph.m), args.seed, args.horizon)
    csv_text = trace.to_csv()
    _write(csv_text, args.out)
    if args.emit_plot_data:
        Path(args.emit_plot_data).write_text(csv_text)
    print(f"max deviation: {trace.max_deviation:.6g}", file=sys.stderr)
    print(f"empirical verdict: {trace.verdict} (slack {trace.slack:.4g})", file=sys.stderr)
    for n in trace.notes:
        print(f"note: {n}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = BenchConfig(instances=args.instances, seed=args.seed or 0,
                      time_limit=args.time_limit or 120.0, workers=args.workers,
                      external=args.external_solver, engine=args.engine,
                      params=_params(args, None))
    if args.sizes:
        cfg.sizes = tuple(int(v) for v in args.sizes.split(","))
    if args.horizons:
        cfg.horizons = tuple(int(v) for v in args.horizons.split(","))
    results, timing = run_bench(cfg)
    _write(results, args.out)
    if args.out and args.out != "-":
        out = Path(args.out)
        out.with_name(out.stem + "_timing.csv").write_text(timing)
    return EXIT_OK


def cmd_export_lp(args) -> int:
    loaded = load_problem(args.problem, args.horizon)
    p = loaded.problem
    path = args.path or choose_path(p)
    if path in ("lp", "spectral"):
        model = reach_avoid_model(p).model
    elif path == "complete" or PATHS.get(path) == COMPLETE_PATH:
        pm = PlanModel(p, "complete")
        pm.model.set_objective(pm.cost_expr(matrices=False))
        model = pm.model
    else:
        try:
            model = linearized_model(p, _params(args, loaded), _solver(args, loaded))
        except Infeasible as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
    _write(format_lp(model), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gtlswarm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, horizon=True):
        if horizon:
            p.add_argument("--horizon", type=int, help="override the file's horizon")
        p.add_argument("--out", help="output file (default: stdout)")

    def solver_flags(p):
        p.add_argument("--time-limit", type=float, metavar="SECONDS")
        p.add_argument("--external-solver", metavar="CMDTEMPLATE",
                       help="command using {lp}, {sol}, {time_limit}; "
                            "defaults to $GTLSWARM_SOLVER when engine is external")
        for flag in ("tr-lambda", "tr-rmin", "tr-rexp", "tr-rcon", "eps-tol", "eps-acc"):
            p.add_argument(f"--{flag}", type=float)

    p = sub.add_parser("validate", help="check a problem file")
    p.add_argument("problem")
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synthesize", help="compute a Markov plan")
    p.add_argument("problem")
    common(p)
    p.add_argument("--path", choices=["auto", *sorted(PATHS)])
    solver_flags(p)
    p.add_argument("--emit-plot-data", metavar="CSV", help="write planned densities as CSV")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run agents under a solved plan")
    p.add_argument("problem")
    p.add_argument("solution")
    p.add_argument("--agents", default="10000", metavar="N[,N...]")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.add_argument("--emit-plot-data", metavar="CSV", help="copy of the trace CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="random benchmark sweep")
    p.add_argument("--instances", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", help="comma-separated n_r values")
    p.add_argument("--horizons", help="comma-separated horizons")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--engine", choices=["highs", "builtin"], default="highs")
    p.add_argument("--out")
    solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-lp", help="write the encoded model in LP format")
    p.add_argument("problem")
    common(p)
    p.add_argument("--path", choices=["auto", *sorted(PATHS)])
    solver_flags(p)
    p.set_defaults(func=cmd_export_lp)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "path", None) == "auto":
        args.path = None
    try:
        return args.func(args)
    except ProblemFileError as exc:
        print("invalid problem file:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ExternalSolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    np.set_printoptions(precision=6)
    sys.exit(main())

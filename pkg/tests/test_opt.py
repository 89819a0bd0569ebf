import itertools
import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlswarm.opt import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinExpr, Model, SolverConfig,
                          solve_lp, solve_milp)
from gtlswarm.opt import bnb, simplex
from gtlswarm.opt.external import ExternalSolverError, solve_external
from gtlswarm.opt.lpfile import format_lp, models_equivalent, parse_lp, read_solution
from gtlswarm.problems import toy_problem
from gtlswarm.synthesis.general import mccormick_model

ENGINES = [SolverConfig("highs"), SolverConfig("builtin")]
IDS = ["highs", "builtin"]


def max_violation(model: Model, x: np.ndarray) -> float:
    worst = 0.0
    for r in model.rows:
        lhs = float(r.coef @ x[r.index])
        if r.sense == "<=":
            worst = max(worst, lhs - r.rhs)
        elif r.sense == ">=":
            worst = max(worst, r.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - r.rhs))
    lb, ub = model.bounds()
    return max(worst, float(np.max(lb - x, initial=0)), float(np.max(x - ub, initial=0)))


def random_lp(rng, n=6, m=5):
    mdl = Model("rand")
    xs = [mdl.add_var(f"x{j}", 0.0, float(rng.uniform(1, 5))) for j in range(n)]
    A = rng.normal(size=(m, n))
    x_feas = rng.uniform(0, 1, n)
    b = A @ x_feas + rng.uniform(0, 1, m)
    for i in range(m):
        mdl.add_constr(LinExpr(dict(zip(xs, A[i]))), "<=", float(b[i]))
    mdl.set_objective(LinExpr(dict(zip(xs, rng.normal(size=n)))))
    return mdl, A, b


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_minimal_lp(cfg):
    mdl = Model()
    x = mdl.add_var("x", -np.inf, np.inf)
    mdl.add_constr(LinExpr.var(x), ">=", 3.0)
    mdl.set_objective(LinExpr.var(x))
    sol = solve_lp(mdl, cfg)
    assert sol.status == OPTIMAL
    assert sol.x[x] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(3.0)


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_unbounded_and_infeasible_lp(cfg):
    mdl = Model()
    x = mdl.add_var("x", 0.0, np.inf)
    mdl.set_objective(LinExpr.var(x), "max")
    assert solve_lp(mdl, cfg).status == UNBOUNDED
    mdl.add_constr(LinExpr.var(x), "<=", -1.0)
    assert solve_lp(mdl, cfg).status == INFEASIBLE


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_degenerate_redundant_equalities(cfg):
    mdl = Model()
    x = [mdl.add_var(f"x{i}", 0.0, np.inf) for i in range(4)]
    e = LinExpr({x[0]: 1.0, x[1]: 1.0, x[2]: 1.0, x[3]: 1.0})
    mdl.add_constr(e, "==", 1.0)
    mdl.add_constr(e * 2.0, "==", 2.0)
    mdl.add_constr(LinExpr({x[0]: 1.0, x[1]: 1.0}), "==", 1.0)
    mdl.add_constr(LinExpr({x[0]: 1.0, x[1]: 1.0, x[2]: 0.0}), "<=", 1.0)
    mdl.add_constr(LinExpr({x[2]: 1.0}), "<=", 0.0)
    mdl.set_objective(LinExpr({x[0]: -1.0, x[1]: -1.0, x[3]: 1.0}))
    sol = solve_lp(mdl, cfg)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.0)


def test_strong_duality_on_random_lp():
    rng = np.random.default_rng(2)
    for _ in range(10):
        # min c.x s.t. A x >= b, x >= 0  and its dual  max b.y s.t. A^T y <= c, y >= 0
        n, m = 5, 4
        A = rng.uniform(0.1, 1, (m, n))
        b = rng.uniform(0.5, 1, m)
        c = rng.uniform(0.5, 2, n)
        primal = Model()
        x = [primal.add_var(f"x{j}") for j in range(n)]
        for i in range(m):
            primal.add_constr(LinExpr(dict(zip(x, A[i]))), ">=", b[i])
        primal.set_objective(LinExpr(dict(zip(x, c))))
        dual = Model(sense="max")
        y = [dual.add_var(f"y{i}") for i in range(m)]
        for j in range(n):
            dual.add_constr(LinExpr(dict(zip(y, A[:, j]))), "<=", c[j])
        dual.set_objective(LinExpr(dict(zip(y, b))))
        for cfg in ENGINES:
            p, d = solve_lp(primal, cfg), solve_lp(dual, cfg)
            assert p.objective == pytest.approx(d.objective, abs=1e-7)
            # reported duals are a dual solution as well
            assert float(np.dot(p.duals, b)) == pytest.approx(p.objective, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_simplex_matches_highs(seed):
    mdl, _, _ = random_lp(np.random.default_rng(seed))
    a = simplex.solve_lp(mdl)
    h = solve_lp(mdl)
    assert a.status == h.status == OPTIMAL
    assert a.objective == pytest.approx(h.objective, abs=1e-7)
    assert max_violation(mdl, a.x) <= 1e-7


def test_simplex_is_deterministic():
    mdl, _, _ = random_lp(np.random.default_rng(9))
    a, b = simplex.solve_lp(mdl), simplex.solve_lp(mdl)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations



def mixed_bounds_lp(rng):
    """Free, one-sided, boxed and fixed columns with mixed row senses."""
    n, m = int(rng.integers(1, 8)), int(rng.integers(0, 8))
    mdl = Model("mixed", str(rng.choice(["min", "max"])))
    kinds = [(0.0, np.inf), (-np.inf, np.inf), (-1.0, 2.0), (-np.inf, 3.0), (0.5, 0.5)]
    for j in range(n):
        mdl.add_var(f"x{j}", *kinds[int(rng.integers(len(kinds)))])
    for _ in range(m):
        coef = {j: float(rng.integers(-3, 4)) for j in range(n) if rng.random() < 0.6}
        if any(coef.values()):
            mdl.add_constr(LinExpr(coef), str(rng.choice(["<=", ">=", "=="])),
                           float(rng.integers(-4, 5)))
    mdl.set_objective(LinExpr({j: float(rng.integers(-3, 4)) for j in range(n)}))
    return mdl


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bounded_simplex_matches_highs_on_mixed_bounds(seed):
    mdl = mixed_bounds_lp(np.random.default_rng(seed))
    a, h = simplex.solve_lp(mdl), solve_lp(mdl)
    assert a.status == h.status
    if h.status == OPTIMAL:
        assert a.objective == pytest.approx(h.objective, rel=1e-7, abs=1e-7)
        assert max_violation(mdl, a.x) <= 1e-7


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_warm_start_matches_cold_start(seed):
    rng = np.random.default_rng(seed)
    mdl, _, _ = random_lp(rng)
    lp = simplex.BoundedLP(mdl)
    first, basis = lp.solve()
    assert first.status == OPTIMAL
    lb, ub = mdl.bounds()
    ub = ub.copy()
    j = int(rng.integers(mdl.num_vars))
    ub[j] = max(lb[j], first.x[j] - 0.5)
    warm, _ = lp.solve(lb, ub, warm=basis)
    cold, _ = lp.solve(lb, ub)
    assert warm.status == cold.status
    if cold.status == OPTIMAL:
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


def test_builtin_handles_desk_scale_relaxation():
    from gtlswarm.cli.bench import random_instance
    mdl = mccormick_model(random_instance(14, 15, 8)).model
    a = bnb.solve_milp(mdl, time_limit=60)
    h = solve_milp(mdl)
    assert a.status == h.status == OPTIMAL
    assert a.objective == pytest.approx(h.objective, abs=1e-6)
    assert mdl.max_violation(a.x) <= 1e-6

def knapsack(values, weights, cap):
    mdl = Model("knap", "max")
    z = [mdl.add_binary(f"z{i}") for i in range(len(values))]
    mdl.add_constr(LinExpr(dict(zip(z, weights))), "<=", cap)
    mdl.set_objective(LinExpr(dict(zip(z, values))))
    return mdl


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_knapsack_exact(cfg):
    values, weights, cap = [6.0, 10.0, 12.0], [1.0, 2.0, 3.0], 5.0
    best = max(sum(v for v, b in zip(values, pick) if b)
               for pick in itertools.product([0, 1], repeat=3)
               if sum(w for w, b in zip(weights, pick) if b) <= cap)
    sol = solve_milp(knapsack(values, weights, cap), cfg)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(best) == pytest.approx(22.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bnb_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = 6
    values, weights = rng.uniform(1, 10, n), rng.uniform(1, 5, n)
    cap = float(weights.sum() / 2)
    best = max(float(values @ np.array(p)) for p in itertools.product([0, 1], repeat=n)
               if float(weights @ np.array(p)) <= cap)
    sol = bnb.solve_milp(knapsack(values, weights, cap))
    assert sol.objective == pytest.approx(best, rel=1e-6)
    # incumbents only improve
    objs = [o for _, o in sol.incumbents]
    assert objs == sorted(objs)
    assert sol.bound >= sol.objective - 1e-6 * abs(sol.objective)


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_pure_lp_through_milp(cfg):
    mdl, _, _ = random_lp(np.random.default_rng(4))
    assert solve_milp(mdl, cfg).objective == pytest.approx(solve_lp(mdl, cfg).objective)


@pytest.mark.parametrize("cfg", ENGINES, ids=IDS)
def test_infeasible_binary_system(cfg):
    mdl = Model()
    a, b = mdl.add_binary("a"), mdl.add_binary("b")
    mdl.add_constr(LinExpr({a: 1.0, b: 1.0}), "==", 1.0)
    mdl.add_constr(LinExpr({a: 1.0, b: 1.0}), "==", 2.0)
    assert solve_milp(mdl, cfg).status == INFEASIBLE


def test_milp_solution_integral_and_feasible():
    p = toy_problem()
    mdl = mccormick_model(p).model
    sol = solve_milp(mdl)
    assert sol.status == OPTIMAL
    bins = np.array(mdl.binary)
    assert np.all(np.minimum(np.abs(sol.x[bins]), np.abs(sol.x[bins] - 1)) <= 1e-6)
    assert max_violation(mdl, sol.x) <= 1e-7


def test_time_limit_is_reported():
    rng = np.random.default_rng(0)
    n = 60
    mdl = knapsack(rng.uniform(1, 10, n), rng.uniform(1, 10, n), 100.0)
    sol = bnb.solve_milp(mdl, time_limit=0.05)
    assert sol.status in ("time-limit", OPTIMAL)
    if sol.status == "time-limit":
        assert sol.bound is not None


# LP files --------------------------------------------------------------------

EMPTY_GOLDEN = "\\ Model model\nMinimize\n obj:\nSubject To\nBounds\nBinaries\nEnd\n"


def test_empty_model_golden():
    assert format_lp(Model()) == EMPTY_GOLDEN


def test_binaries_section_lists_binaries():
    mdl = knapsack([1.0, 2.0], [1.0, 1.0], 1.0)
    mdl.add_var("cont", 0.0, 1.0)
    text = format_lp(mdl)
    section = text.split("Binaries\n")[1].split("End")[0].split()
    assert section == ["z0", "z1"]


def test_toy_model_round_trip():
    mdl = mccormick_model(toy_problem()).model
    text = format_lp(mdl)
    back = parse_lp(text)
    assert models_equivalent(mdl, back)
    assert format_lp(back) == text
    assert solve_milp(back).objective == pytest.approx(solve_milp(mdl).objective)


def test_read_solution_pairs(tmp_path):
    f = tmp_path / "out.sol"
    f.write_text("Optimal - objective value 3\n  0 x   1.5  0\n  1 y   -2  0\n")
    status, vals = read_solution(f, ["x", "y"])
    assert status == OPTIMAL
    assert vals == {"x": 1.5, "y": -2.0}


FAKE_SOLVER = textwrap.dedent("""
    import sys
    from gtlswarm.opt import solve_milp
    from gtlswarm.opt.lpfile import parse_lp
    lp, out = sys.argv[1], sys.argv[2]
    mdl = parse_lp(open(lp).read())
    sol = solve_milp(mdl)
    with open(out, "w") as f:
        f.write(sol.status + "\\n")
        if sol.x is not None:
            for n, v in zip(mdl.names, sol.x):
                f.write(f"{n} {float(v)!r}\\n")
""")


def test_external_adapter_round_trip(tmp_path):
    script = tmp_path / "fake_solver.py"
    script.write_text(FAKE_SOLVER)
    cmd = f"{sys.executable} {script} {{lp}} {{sol}}"
    mdl = knapsack([6.0, 10.0, 12.0], [1.0, 2.0, 3.0], 5.0)
    sol = solve_external(mdl, cmd)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(22.0)


def test_external_adapter_needs_command(monkeypatch):
    monkeypatch.delenv("GTLSWARM_SOLVER", raising=False)
    with pytest.raises(ExternalSolverError):
        solve_external(Model(), None)


def test_round_trip_keeps_exponent_coefficients():
    mdl = Model("tiny")
    x, y = mdl.add_var("x", 0.0, 1e-07), mdl.add_var("y1e", -2.5e+30, 1.0)
    mdl.add_constr(LinExpr({x: 1e-05, y: -3e-12}), ">=", -1e-07)
    mdl.set_objective(LinExpr({x: 2e-09}))
    back = parse_lp(format_lp(mdl))
    assert models_equivalent(mdl, back)
    assert back.rows[0].rhs == -1e-07

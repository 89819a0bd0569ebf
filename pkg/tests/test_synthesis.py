import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlswarm.core.graph import InputError, LabeledGraph, ring_adjacency
from gtlswarm.core.plan import MarkovPlan, is_column_stochastic, replay
from gtlswarm.core.spectral import ergodicity_coefficient, reversibilization_rate
from gtlswarm.encoding.check import encoder_verdict
from gtlswarm.gtl import (TRUE, Always, And, GraphTrajectory, Next, brute_force_satisfiable,
                          compare, parse_formula)
from gtlswarm.synthesis import (INFEASIBLE, SUCCESS, Cost, ReachAvoidSpec, SynthesisProblem,
                                TrustRegionParams, bilinear_error, certificate_residual,
                                choose_path, gtlproco_dispatch, mccormick_initialize,
                                recover_markov, synthesize_complete_graph, synthesize_general,
                                synthesize_reach_avoid_lp, synthesize_reach_avoid_spectral)
from gtlswarm.problems import TOY_ADJACENCY, toy_problem

import gtl_random

NU = np.array([0.2, 0.5, 0.3])
TOY_M1 = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 1]], dtype=float)
TOY_M2 = np.array([[0, 0, 0], [1, 0.75, 0], [0, 0.25, 1]], dtype=float)


def reach_avoid(adj, nu, x0, specs=(), safety=(), weights=None, horizon=3):
    g = LabeledGraph([adj])
    return SynthesisProblem(g, [x0], list(specs), horizon,
                            reach_avoid=ReachAvoidSpec([nu], list(safety), weights))


def safe_starts(rng, A, b, n, count=50):
    out = []
    while len(out) < count:
        x = rng.dirichlet(np.ones(n))
        if np.all(A @ x <= b):
            out.append(x)
    return out


# reach-avoid LP -----------------------------------------------------------------

def test_lp_complete_uniform_is_rank_one():
    nu = np.full(3, 1 / 3)
    res = synthesize_reach_avoid_lp(reach_avoid(np.ones((3, 3)), nu, nu))
    assert res.status == SUCCESS
    M = res.plan.matrices[0][0]
    assert res.objective == pytest.approx(0.0, abs=1e-9)
    assert ergodicity_coefficient(M) == pytest.approx(0.0, abs=1e-8)
    assert M @ nu == pytest.approx(nu, abs=1e-8)


def test_lp_example_graph_target():
    res = synthesize_reach_avoid_lp(reach_avoid(TOY_ADJACENCY, NU, [0.3, 0.3, 0.4]))
    assert res.ok and res.verdict
    M = res.plan.matrices[0][0]
    assert M @ NU == pytest.approx(NU, abs=1e-8)
    assert ergodicity_coefficient(M) <= 1 - 1e-3
    assert is_column_stochastic(M)
    assert np.all(M[np.asarray(TOY_ADJACENCY).T == 0] == 0)


def test_lp_zero_weight_falls_back_to_floor():
    res = synthesize_reach_avoid_lp(
        reach_avoid(TOY_ADJACENCY, NU, [0.3, 0.3, 0.4], weights=[0.0]))
    assert res.ok
    assert ergodicity_coefficient(res.plan.matrices[0][0]) <= 1 - 1e-3


def test_lp_safety_row_survives_replay():
    spec = (parse_formula("G (y <= 0.4)", dim=1), [0])
    res = synthesize_reach_avoid_lp(reach_avoid(TOY_ADJACENCY, NU, [0.3, 0.3, 0.4], [spec]))
    assert res.ok
    A, b = res.certificate["A"], res.certificate["b"]
    assert certificate_residual(A, b, res.certificate["Y"], res.certificate["S"],
                                [res.plan.matrices[0][0]]) <= 1e-7
    M = res.plan.matrices[0][0]
    for x in safe_starts(np.random.default_rng(0), A, b, 3):
        for _ in range(200):
            x = M @ x
            assert np.max(A @ x - b) <= 1e-6


def test_lp_explicit_stacked_safety_rows():
    A = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    b = np.array([0.4, -0.1])
    res = synthesize_reach_avoid_lp(reach_avoid(TOY_ADJACENCY, NU, [0.3, 0.3, 0.4],
                                                safety=[(A, b)]))
    assert res.ok
    M = res.plan.matrices[0][0]
    for x in safe_starts(np.random.default_rng(1), A, b, 3):
        for _ in range(200):
            x = M @ x
            assert np.max(A @ x - b) <= 1e-6


def test_lp_safety_incompatible_with_target_is_infeasible():
    spec = (parse_formula("G (y <= 0.1)", dim=1), [1])
    res = synthesize_reach_avoid_lp(reach_avoid(np.ones((3, 3)), NU, [0.5, 0.05, 0.45], [spec]))
    assert res.status == INFEASIBLE


def test_lp_rejects_non_scrambling():
    ring = ring_adjacency(4, directed=True)
    with pytest.raises(InputError, match="spectral"):
        synthesize_reach_avoid_lp(reach_avoid(ring, np.full(4, 0.25), np.full(4, 0.25)))


def test_lp_rejects_unsafe_start():
    spec = (parse_formula("G (y <= 0.2)", dim=1), [0])
    with pytest.raises(InputError):
        synthesize_reach_avoid_lp(reach_avoid(TOY_ADJACENCY, NU, [0.3, 0.3, 0.4], [spec]))


# spectral -------------------------------------------------------------------------

def test_spectral_complete_graph_reaches_zero():
    nu = np.full(3, 1 / 3)
    res = synthesize_reach_avoid_spectral(reach_avoid(np.ones((3, 3)), nu, nu))
    assert res.ok
    assert res.plan.meta["rates"][0] <= 1e-6


def test_spectral_ring():
    nu = np.full(4, 0.25)
    res = synthesize_reach_avoid_spectral(reach_avoid(ring_adjacency(4, directed=True), nu, nu))
    assert res.ok
    M = res.plan.matrices[0][0]
    rate = res.plan.meta["rates"][0]
    assert rate < 1
    assert rate == pytest.approx(reversibilization_rate(M, nu), abs=1e-8)
    seq = [r[0] for r in res.diagnostics.rates]
    assert all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))
    assert M @ nu == pytest.approx(nu, abs=1e-8)


def test_spectral_zero_weight_only_reports():
    nu = np.full(4, 0.25)
    res = synthesize_reach_avoid_spectral(
        reach_avoid(ring_adjacency(4, directed=True), nu, nu, weights=[0.0]))
    assert res.ok
    assert len(res.diagnostics.iterations) == 0
    M = res.plan.matrices[0][0]
    assert M @ nu == pytest.approx(nu, abs=1e-8)


# complete graph -------------------------------------------------------------------

def complete_problem(specs, x0, horizon=3, cost=None):
    g = LabeledGraph([np.ones((len(x0), len(x0)), dtype=int)])
    return SynthesisProblem(g, [x0], specs, horizon, cost or Cost())


def test_complete_constant_density():
    x0 = np.array([0.2, 0.3, 0.5])
    specs = [(Always(compare("=", (float(x0[i]),))), [i]) for i in range(3)]
    res = synthesize_complete_graph(complete_problem(specs, x0))
    assert res.ok
    for M in res.plan.matrices[0]:
        assert M == pytest.approx(np.repeat(x0[:, None], 3, axis=1), abs=1e-9)


def test_complete_forced_extraction():
    x0 = np.array([0.2, 0.3, 0.5])
    res = synthesize_complete_graph(complete_problem([(Next(compare("=", (1.0,))), [0])], x0))
    assert res.ok
    assert res.plan.matrices[0][0] == pytest.approx(np.outer([1, 0, 0], np.ones(3)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_complete_extraction_is_exact(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.dirichlet(np.ones(3))
    phi = And(Always(compare("<=", (float(rng.uniform(0.4, 0.9)),))),
              Next(compare(">=", (float(rng.uniform(0.0, 0.3)),))))
    res = synthesize_complete_graph(complete_problem([(phi, [int(rng.integers(3))])], x0,
                                                     cost=Cost(loop=True)))
    if not res.ok:
        return
    plan = res.plan
    assert bilinear_error(plan) <= 1e-12
    for M in plan.matrices[0]:
        assert np.max(np.abs(M.sum(axis=0) - 1)) <= 1e-12
    for t, M in enumerate(plan.matrices[0]):
        assert np.array_equal(M[:, 0], plan.densities[0][t + 1])


def test_complete_rejects_other_graphs():
    with pytest.raises(InputError):
        synthesize_complete_graph(toy_problem())


# McCormick and recovery ---------------------------------------------------------

def test_mccormick_true_formula():
    g = LabeledGraph([TOY_ADJACENCY])
    x0 = np.array([0.2, 0.3, 0.5])
    dens, loop, obj = mccormick_initialize(SynthesisProblem(g, [x0], [(TRUE, [0])], 3))
    assert obj == pytest.approx(0.0)
    assert 1 <= loop <= 3


def test_mccormick_toy_satisfies_encoder():
    p = toy_problem()
    dens, loop, _ = mccormick_initialize(p)
    traj = GraphTrajectory(p.graph, dens, loop)
    phi, nodes = p.specs[0]
    assert encoder_verdict(traj, phi, nodes)


def test_mccormick_unsat_is_infeasible():
    p = toy_problem()
    bad = parse_formula("G (y <= -0.5)", dim=1)
    q = SynthesisProblem(p.graph, p.x0, [(bad, [0])], 2)
    from gtlswarm.synthesis import Infeasible
    with pytest.raises(Infeasible):
        mccormick_initialize(q)
    assert synthesize_general(q).status == INFEASIBLE


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mccormick_relaxation_is_sound(seed):
    # on a complete graph every grid trajectory is realizable, so a brute-force
    # witness implies the relaxation is feasible
    rng = np.random.default_rng(seed)
    g = LabeledGraph([np.ones((3, 3), dtype=int)])
    traj = gtl_random.random_trajectory(rng, g, 2)
    phi = gtl_random.random_formula(rng, traj, 2)
    x0 = np.array([0.5, 0.25, 0.25])
    found, _ = brute_force_satisfiable(g, phi, [0], 2, 4, x0=[x0])
    if not found:
        return
    from gtlswarm.synthesis import Infeasible
    try:
        mccormick_initialize(SynthesisProblem(g, [x0], [(phi, [0])], 2))
    except Infeasible:
        pytest.fail("relaxation infeasible although a satisfying trajectory exists")


def test_recover_stationary_trajectory():
    g = LabeledGraph([TOY_ADJACENCY])
    x = np.tile([0.2, 0.3, 0.5], (4, 1))
    mats, resid = recover_markov(g, [x])
    assert resid == 0.0
    for M in mats[0]:
        assert M == pytest.approx(np.eye(3), abs=1e-12)


def test_recover_teleport_has_residual():
    g = LabeledGraph([TOY_ADJACENCY])
    x = np.array([[1.0, 0, 0], [0, 0, 1.0]])
    _, resid = recover_markov(g, [x])
    assert resid > 0.5


def test_recover_toy_densities():
    p = toy_problem()
    dens = []
    for x0, M in zip(p.x0, (TOY_M1, TOY_M2)):
        dens.append(np.array([x0, M @ x0, M @ x0]))
    mats, resid = recover_markov(p.graph, dens)
    assert resid == pytest.approx(0.0, abs=1e-9)
    for s in range(2):
        for t in range(2):
            assert mats[s][t] @ dens[s][t] == pytest.approx(dens[s][t + 1], abs=1e-9)


# general path ---------------------------------------------------------------------

def test_general_toy():
    res = synthesize_general(toy_problem())
    assert res.ok and res.verdict
    x1, x2 = res.plan.densities
    for t in (1, 2):
        assert abs(x1[t][0]) <= 1e-6 and abs(x2[t][0]) <= 1e-6
        assert abs(x2[t][1] - 2 * x1[t][1]) <= 1e-6
    assert res.diagnostics.eps_bil <= 1e-6


def test_general_diagnostics_invariants():
    params = TrustRegionParams()
    res = synthesize_general(toy_problem(), params)
    for k, it in enumerate(res.diagnostics.iterations):
        if it.accepted:
            assert it.ratio <= 1.0
        assert params.r_min <= it.radius <= params.r0 * params.r_exp ** (k + 1)


def test_general_matches_complete_path():
    x0 = np.array([0.6, 0.3, 0.1])
    phi = parse_formula("F (y >= 0.5) & G (y <= 0.7)", dim=1)
    w = np.array([[0.0, 0.0, 0.0]] + [[1.0, 2.0, 0.5]] * 3)
    p = complete_problem([(phi, [2])], x0, cost=Cost(density=[w]))
    a, b = synthesize_complete_graph(p), synthesize_general(p)
    assert a.ok and b.ok
    assert a.verdict == b.verdict
    assert b.objective == pytest.approx(a.objective, abs=1e-6)


def test_general_respects_inaccuracy_contract():
    # a strict accuracy tolerance below what the trust region can reach
    params = TrustRegionParams(eps_acc=1e-6, r_min=0.5, r0=0.6)
    res = synthesize_general(toy_problem(), params)
    if res.ok:
        assert res.diagnostics.eps_bil <= 1e-6 and res.verdict
    else:
        assert res.status in ("inaccurate-local-solution", INFEASIBLE)
        assert res.plan is not None


def test_trust_region_params_validated():
    with pytest.raises(InputError):
        TrustRegionParams(r_min=2.0)
    with pytest.raises(InputError):
        TrustRegionParams(r_exp=1.0)
    with pytest.raises(InputError):
        TrustRegionParams(lam=0.0)


# dispatch and metrics -----------------------------------------------------------

def test_dispatch_routes():
    nu = np.full(4, 0.25)
    assert choose_path(reach_avoid(TOY_ADJACENCY, NU, NU)) == "lp"
    assert choose_path(reach_avoid(ring_adjacency(4, directed=True), nu, nu)) == "spectral"
    assert choose_path(complete_problem([(TRUE, [0])], np.full(3, 1 / 3))) == "complete"
    assert choose_path(toy_problem()) == "general"
    assert gtlproco_dispatch(reach_avoid(TOY_ADJACENCY, NU, NU)).path == "reach-avoid-lp"
    assert gtlproco_dispatch(complete_problem([(TRUE, [0])], np.full(3, 1 / 3))).path \
        == "complete-milp"
    with pytest.raises(InputError):
        gtlproco_dispatch(toy_problem(), path="bogus")


def test_bilinear_error_toy_is_zero():
    p = toy_problem()
    dens = tuple(np.array([x0, M @ x0, M @ x0]) for x0, M in zip(p.x0, (TOY_M1, TOY_M2)))
    I = np.eye(3)
    plan = MarkovPlan(((TOY_M1, I), (TOY_M2, I)), dens, 2, loop=2)
    assert bilinear_error(plan) == 0.0


def test_bilinear_error_detects_perturbation():
    x0 = np.array([0.6, 0.2, 0.2])
    M = np.repeat(x0[:, None], 3, axis=1)
    dens = tuple(replay([x0], [[M]], 1))
    P = M.copy()
    P[0, 0] += 0.01
    plan = MarkovPlan(((P,),), dens, 1)
    assert bilinear_error(plan) >= 0.005


def test_lp_reports_when_invariance_forces_unit_tau():
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    b = np.array([0.665, 0.665])
    nu = np.array([0.5, 0.17, 0.33])
    p = reach_avoid(TOY_ADJACENCY, nu, [0.23, 0.55, 0.22], safety=[(A, b)])
    from gtlswarm.synthesis import reach_avoid_model
    from gtlswarm.opt import solve_lp
    ram = reach_avoid_model(p)
    sol = solve_lp(ram.model)
    assert sol.objective == pytest.approx(1.0)
    res = synthesize_reach_avoid_lp(p)
    assert res.status == INFEASIBLE and "tau_1 = 1" in res.message

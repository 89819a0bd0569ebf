import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlswarm.core.graph import InputError, LabeledGraph
from gtlswarm.core.plan import MarkovPlan
from gtlswarm.problems import toy_problem
from gtlswarm.sim import (TRACE_HEADER, AgentPopulation, largest_remainder, quantization_slack,
                          run_simulation, step_agents, uniform_draws)
from gtlswarm.synthesis import SynthesisProblem, synthesize_general

TOY_M1 = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 1]], dtype=float)
TOY_M2 = np.array([[0, 0, 0], [1, 0.75, 0], [0, 0.25, 1]], dtype=float)


def toy_plan():
    p = toy_problem()
    I = np.eye(3)
    dens = tuple(np.array([x0, M @ x0, M @ x0]) for x0, M in zip(p.x0, (TOY_M1, TOY_M2)))
    return p, MarkovPlan(((TOY_M1, I), (TOY_M2, I)), dens, 2, loop=2)


def test_largest_remainder_quantization_example():
    assert list(largest_remainder([1 / 3, 2 / 3], 10)) == [3, 7]
    pop = AgentPopulation.place([[1 / 3, 2 / 3]], [10])
    assert list(pop.density(0)) == [0.3, 0.7]


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.integers(1, 500), st.integers(0, 2**32 - 1))
def test_largest_remainder_properties(n, agents, seed):
    x = np.random.default_rng(seed).dirichlet(np.ones(n))
    c = largest_remainder(x, agents)
    assert c.sum() == agents and np.all(c >= 0)
    assert np.max(np.abs(c - agents * x)) < 1.0


def test_deterministic_column():
    M = np.array([[0.0, 0.0], [1.0, 1.0]])
    bins = np.array([0, 0, 1, 0])
    out = step_agents(bins, M, np.random.default_rng(0).random(4))
    assert list(out) == [1, 1, 1, 1]


def test_identity_keeps_population():
    bins = np.array([0, 2, 1, 1, 2])
    assert np.array_equal(step_agents(bins, np.eye(3), np.linspace(0, 1, 5)), bins)


def test_step_refuses_non_stochastic():
    with pytest.raises(InputError):
        step_agents(np.array([0]), np.array([[0.5, 0.0], [0.4, 1.0]]), np.array([0.1]))


def test_large_population_split():
    n = 10**6
    bins = np.full(n, 1)
    out = step_agents(bins, TOY_M2, uniform_draws(0, 1, 0, n))
    frac = np.bincount(out, minlength=3) / n
    assert frac[0] == 0
    assert abs(frac[1] - 0.75) <= 0.002 and abs(frac[2] - 0.25) <= 0.002


def test_draws_do_not_depend_on_population_split():
    a = uniform_draws(7, 1, 3, 100)
    assert np.array_equal(a[:40], uniform_draws(7, 1, 3, 40))
    assert not np.array_equal(a, uniform_draws(7, 1, 4, 100))


def test_identity_plan_has_zero_deviation():
    p = toy_problem()
    I = np.eye(3)
    dens = tuple(np.tile(x, (3, 1)) for x in (np.array([0.3, 0.3, 0.4]),
                                               np.array([0.3, 0.4, 0.3])))
    plan = MarkovPlan(((I, I), (I, I)), dens, 2, loop=1)
    trace = run_simulation(p, plan, [10, 10], seed=3)
    assert trace.max_deviation == 0.0
    for s in range(2):
        assert np.all(trace.empirical[s] == trace.empirical[s][0])


def test_toy_plan_deviation_and_verdict():
    p, plan = toy_plan()
    trace = run_simulation(p, plan, [10**4, 10**4], seed=0)
    assert trace.max_deviation <= 0.02
    assert trace.verdict is True
    assert trace.horizon == 2


def test_conservation_and_support():
    p, plan = toy_plan()
    trace = run_simulation(p, plan, [257, 131], seed=5, horizon=6, record_agents=True)
    adj = p.graph.adjacency
    assert trace.horizon == 6
    for t in range(6):
        for s in range(2):
            a, b = trace.agents[t][s], trace.agents[t + 1][s]
            assert len(b) == len(a)
            assert np.all(adj[s][a, b])
    for s in range(2):
        assert np.allclose(trace.empirical[s].sum(axis=1), 1.0)


def test_trace_csv_is_deterministic():
    p, plan = toy_plan()
    a = run_simulation(p, plan, [500, 500], seed=11).to_csv()
    b = run_simulation(p, plan, [500, 500], seed=11).to_csv()
    c = run_simulation(p, plan, [500, 500], seed=12).to_csv()
    assert a == b and a != c
    lines = a.splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    keys = [tuple(int(v) for v in ln.split(",")[:3]) for ln in lines[1:]]
    assert keys == sorted(keys) and len(keys) == 3 * 2 * 3


def test_deviation_shrinks_with_population():
    p, plan = toy_plan()
    medians = []
    for n in (10**2, 10**3, 10**4):
        devs = [run_simulation(p, plan, [n, n], seed=s).deviation[1] for s in range(20)]
        medians.append(float(np.median(devs)))
    assert medians[0] > medians[1] > medians[2]


def test_synthesized_plan_replays():
    p = toy_problem()
    res = synthesize_general(p)
    trace = run_simulation(p, res.plan, [10**4, 10**4], seed=0)
    assert trace.max_deviation <= 0.02


def test_bad_inputs():
    p, plan = toy_plan()
    with pytest.raises(InputError):
        run_simulation(p, plan, [10, 10], horizon=0)
    with pytest.raises(InputError):
        run_simulation(p, plan, [10])
    free = MarkovPlan(plan.matrices, plan.densities, 2)
    with pytest.raises(InputError):
        run_simulation(p, free, [10, 10], horizon=3)


def test_quantization_slack_formula():
    assert quantization_slack([100, 400]) == pytest.approx(0.01 + 3 * 0.1)

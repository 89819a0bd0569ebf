import csv
import io
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
import yaml

from gtlswarm.cli.bench import (RESULT_HEADER, BenchConfig, random_adjacency, random_instance,
                                run_bench)
from gtlswarm.cli.gridworld import grid_adjacency, gridworld_problem
from gtlswarm.cli.main import main
from gtlswarm.cli.problemfile import (content_hash, load_problem, problem_from_dict,
                                      problem_to_dict)
from gtlswarm.opt.lpfile import models_equivalent, parse_lp, read_lp
from gtlswarm.problems import path as example_path

TOY = str(example_path("toy"))
GRID = str(example_path("gridworld_5x7"))
DATA = Path(__file__).parent / "data"


def toy_raw():
    return yaml.safe_load(open(TOY))


def write_raw(tmp_path, raw, name="p.yaml"):
    f = tmp_path / name
    f.write_text(yaml.safe_dump(raw))
    return str(f)


# problem files ----------------------------------------------------------------

def test_shipped_examples_load():
    toy = load_problem(TOY).problem
    assert toy.graph.n_r == 3 and toy.graph.m == 2 and toy.horizon == 2
    grid = load_problem(GRID).problem
    assert grid.graph.n_r == 35


def test_problem_dict_round_trip():
    loaded = load_problem(TOY)
    again = problem_from_dict(problem_to_dict(loaded.problem))
    assert again.digest == loaded.digest
    assert content_hash(toy_raw()) == loaded.digest


def test_problem_file_errors_are_collected(tmp_path, capsys):
    raw = toy_raw()
    raw["initial"][0] = [0.3, 0.3, 0.3]
    raw["adjacency"][1]["v1"] = ["v9"]
    assert main(["validate", write_raw(tmp_path, raw)]) == 2
    err = capsys.readouterr().err
    assert "densities sum to 0.9" in err
    assert "v9" in err


def test_validate_reports_graph_checks(capsys):
    assert main(["validate", TOY]) == 0
    out = capsys.readouterr().out
    assert "complete: no, scrambling: yes" in out
    assert "path: general" in out


def test_validate_dimension_mismatch(tmp_path, capsys):
    raw = toy_raw()
    raw["specs"][0]["formula"] = "G (y <= [0.1, 0.2])"
    assert main(["validate", write_raw(tmp_path, raw)]) == 2
    assert "dimension 2" in capsys.readouterr().err


def test_validate_syntax_error(tmp_path, capsys):
    raw = toy_raw()
    raw["specs"][0]["formula"] = "G (y <= "
    assert main(["validate", write_raw(tmp_path, raw)]) == 2
    assert "column" in capsys.readouterr().err


# synthesize / simulate ----------------------------------------------------------

def test_synthesize_toy(tmp_path, capsys):
    out = tmp_path / "sol.yaml"
    plot = tmp_path / "plot.csv"
    assert main(["synthesize", TOY, "--out", str(out), "--emit-plot-data", str(plot)]) == 0
    sol = yaml.safe_load(out.read_text())
    assert sol["status"] == "success" and sol["verdict"] is True
    assert sol["eps_bil"] <= 1e-6
    assert sol["problem_hash"] == load_problem(TOY).digest
    assert len(sol["plan"]["matrices"]) == 2
    rows = list(csv.reader(io.StringIO(plot.read_text())))
    assert rows[0] == ["t", "sub_swarm", "bin", "density"] and len(rows) == 1 + 3 * 2 * 3
    assert "status: success" in capsys.readouterr().err


def test_synthesize_is_deterministic(tmp_path):
    docs = []
    for k in range(2):
        f = tmp_path / f"s{k}.yaml"
        assert main(["synthesize", TOY, "--out", str(f)]) == 0
        d = yaml.safe_load(f.read_text())
        d["diagnostics"].pop("wall_time")
        docs.append(d)
    assert docs[0] == docs[1]


def test_synthesize_unsat_exit_code(tmp_path):
    raw = toy_raw()
    raw["specs"][0]["formula"] = "G (y <= 0.1) & F (y >= 0.2)"
    assert main(["synthesize", write_raw(tmp_path, raw), "--out", str(tmp_path / "o")]) == 3


def test_synthesize_inaccurate_exit_code(tmp_path):
    # an accuracy tolerance below the floating-point residual cannot be met
    rc = main(["synthesize", TOY, "--out", str(tmp_path / "o"), "--tr-rmin", "0.9",
               "--eps-acc", "1e-14", "--eps-tol", "1e-14"])
    sol = yaml.safe_load((tmp_path / "o").read_text())
    assert rc == 4
    assert sol["status"] == "inaccurate-local-solution"
    assert sol["plan"] is not None and sol["eps_bil"] > 1e-14


def test_bad_flag_value_exit_code(tmp_path):
    assert main(["synthesize", TOY, "--out", str(tmp_path / "o"), "--tr-rexp", "0.5"]) == 2


def test_missing_file_exit_code():
    assert main(["validate", "/nonexistent/problem.yaml"]) == 2


def test_simulate_round_trip(tmp_path, capsys):
    sol = tmp_path / "sol.yaml"
    assert main(["synthesize", TOY, "--out", str(sol)]) == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", TOY, str(sol), "--agents", "10000", "--seed", "1",
                 "--out", str(a)]) == 0
    err = capsys.readouterr().err
    dev = float(err.split("max deviation:")[1].split()[0])
    assert dev <= 0.02
    assert "empirical verdict: True" in err
    assert main(["simulate", TOY, str(sol), "--agents", "10000,10000", "--seed", "1",
                 "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_refuses_other_problem(tmp_path, capsys):
    sol = tmp_path / "sol.yaml"
    assert main(["synthesize", TOY, "--out", str(sol)]) == 0
    raw = toy_raw()
    raw["initial"][0] = [0.4, 0.2, 0.4]
    assert main(["simulate", write_raw(tmp_path, raw), str(sol)]) == 2
    assert "different problem" in capsys.readouterr().err


def test_simulate_identity_plan(tmp_path, capsys):
    raw = toy_raw()
    raw["specs"] = [{"formula": "G (y = 0.6)", "nodes": ["v1"]}]
    prob = write_raw(tmp_path, raw)
    sol = tmp_path / "sol.yaml"
    assert main(["synthesize", prob, "--out", str(sol)]) == 0
    doc = yaml.safe_load(sol.read_text())
    eye = np.eye(3).tolist()
    doc["plan"]["matrices"] = [[eye, eye], [eye, eye]]
    doc["plan"]["densities"] = [[x] * 3 for x in raw["initial"]]
    doc["plan"]["loop"] = 1
    sol.write_text(yaml.safe_dump(doc))
    assert main(["simulate", prob, str(sol), "--agents", "10",
                 "--out", str(tmp_path / "t.csv")]) == 0
    assert "max deviation: 0" in capsys.readouterr().err


def test_installed_entry_point(tmp_path):
    exe = shutil.which("gtlswarm")
    if exe is None:
        pytest.skip("console script not installed")
    proc = subprocess.run([exe, "validate", TOY], capture_output=True, text=True)
    assert proc.returncode == 0 and "valid" in proc.stdout


# export-lp --------------------------------------------------------------------

def test_export_lp_matches_golden(tmp_path):
    a, b = tmp_path / "a.lp", tmp_path / "b.lp"
    assert main(["export-lp", TOY, "--out", str(a)]) == 0
    assert main(["export-lp", TOY, "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert a.read_text() == (DATA / "toy_general.lp").read_text()


def test_export_lp_round_trip(tmp_path):
    from gtlswarm.synthesis import linearized_model
    f = tmp_path / "a.lp"
    assert main(["export-lp", TOY, "--out", str(f)]) == 0
    back = read_lp(f)
    assert models_equivalent(linearized_model(load_problem(TOY).problem), back)


def test_export_lp_complete_and_reach_avoid(tmp_path):
    raw = toy_raw()
    raw["adjacency"] = [{v: ["v1", "v2", "v3"] for v in raw["nodes"]}] * 2
    f = tmp_path / "c.lp"
    assert main(["export-lp", write_raw(tmp_path, raw), "--out", str(f)]) == 0
    assert "\\ Model complete" in f.read_text()
    raw = toy_raw()
    raw["specs"] = []
    raw["reach_avoid"] = {"targets": [[0.2, 0.5, 0.3], [0.2, 0.5, 0.3]]}
    f = tmp_path / "r.lp"
    assert main(["export-lp", write_raw(tmp_path, raw, "r.yaml"), "--out", str(f)]) == 0
    assert "tau_s0" in f.read_text()


def test_export_lp_empty_node_set(tmp_path):
    raw = toy_raw()
    raw["specs"][0]["nodes"] = []
    a = tmp_path / "a.lp"
    assert main(["export-lp", write_raw(tmp_path, raw, "a.yaml"), "--out", str(a)]) == 0
    raw["specs"] = []
    b = tmp_path / "b.lp"
    assert main(["export-lp", write_raw(tmp_path, raw, "b.yaml"), "--out", str(b)]) == 0
    ma, mb = parse_lp(a.read_text()), parse_lp(b.read_text())
    assert models_equivalent(ma, mb)
    # the only binaries left are the loop indicators
    assert all(n.startswith("l_") for n, b in zip(ma.names, ma.binary) if b)


# bench ------------------------------------------------------------------------

def test_bench_is_deterministic(tmp_path):
    cfg = BenchConfig(instances=10, seed=0, sizes=(5,), horizons=(5, 6), time_limit=60)
    a, _ = run_bench(cfg)
    b, _ = run_bench(cfg)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert tuple(rows[0].keys()) == RESULT_HEADER and len(rows) == 10
    for r in rows:
        if r["status"] == "success":
            assert float(r["eps_bil"]) <= 1e-6 and r["verdict"] == "True"


def test_bench_cli_writes_timing_sidecar(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--instances", "2", "--sizes", "5", "--horizons", "5",
                 "--out", str(out)]) == 0
    timing = (tmp_path / "bench_timing.csv").read_text().splitlines()
    assert timing[0] == "instance,engine,wall_time" and len(timing) == 3


def test_random_graph_degree_bounds():
    rng = np.random.default_rng(0)
    for n in (5, 10, 15, 20):
        for _ in range(20):
            a = random_adjacency(rng, n)
            deg = a.sum(axis=1)
            assert deg.min() >= 2 and deg.max() <= 5
            assert np.all(np.diag(a) == 1)
    for seed in range(3):
        p = random_instance(seed, 10, 5)
        deg = p.graph.adjacency[0].sum(axis=1)
        assert deg.min() >= 2 and deg.max() <= 5


# gridworld ----------------------------------------------------------------------

def test_grid_adjacency_neighbors():
    a = grid_adjacency(2, 3)
    assert a[0].tolist() == [1, 1, 0, 1, 0, 0]
    assert a[4].tolist() == [0, 1, 0, 1, 1, 1]
    assert a.sum(axis=1).tolist() == [3, 4, 3, 3, 4, 3]
    k = grid_adjacency(2, 3, obstacles=[1], knockout=True)
    assert k[0, 1] == 0 and k[1, 1] == 1


def test_gridworld_shipped_file_matches_generator():
    shipped = load_problem(GRID)
    gen = gridworld_problem()
    gen.name = "gridworld_5x7"
    gen = problem_from_dict(problem_to_dict(gen))
    assert gen.digest == shipped.digest

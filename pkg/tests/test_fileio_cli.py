import json

import numpy as np
import pytest

from omegainv import cli
from omegainv.fileio import (ProblemFormatError, builtin_problem, load_json, parse_problem,
                             problem_to_dict, write_problem)
from omegainv.product import build_product, hybrid_equal


def test_running_example_file(problem):
    assert np.allclose(problem.system.A, [[0.9990, 0.1846], [-0.0074, 0.5265]])
    prod = build_product(problem.system, problem.automaton, problem.labeling)
    assert len(prod.i0()) == 3


def test_problem_roundtrip(tmp_path, problem):
    path = tmp_path / "p.json"
    write_problem(problem, path)
    back = parse_problem(path)
    assert problem_to_dict(back) == problem_to_dict(problem)


def test_wrong_input_dimension_is_located(tmp_path):
    d = json.loads(builtin_problem("running_example").read_text())
    d["system"]["U"] = {"lo": [-1, -1], "hi": [1, 1]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ProblemFormatError) as exc:
        parse_problem(path)
    assert "system.U" in str(exc.value)


def test_missing_section_and_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"system": {}}')
    with pytest.raises(ProblemFormatError):
        parse_problem(path)
    path.write_text('{"system": ')
    with pytest.raises(ProblemFormatError) as exc:
        parse_problem(path)
    assert ":1:" in str(exc.value)


def test_quadrotor_file_parses():
    prob = parse_problem(builtin_problem("quadrotor"))
    assert prob.system.n == 4 and prob.system.m == 2
    assert prob.assumptions.passed


def test_cli_expand_certify_simulate(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.run_command(["synth-expand", "--eps", "0.1", "--out", str(out), "--plot-data"]) == 0
    rep = load_json(out / "report_expansion.json")
    assert rep["iterations"] == 3 and rep["certified"]
    assert (out / "plot_expansion.json").exists()
    assert cli.run_command(["certify", str(out / "set_expansion.json"), "--out", str(out)]) == 0
    assert load_json(out / "certificate.json")["certified"]
    code = cli.run_command(["simulate", "--set", str(out / "set_expansion.json"), "--runs", "10",
                            "--steps", "30", "--seed", "0", "--out", str(out)])
    assert code == 0
    runs = load_json(out / "simulation.json")["runs"]
    assert [r["verdict"] for r in runs] == ["OK"] * 10


def test_cli_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.run_command(["synth-contract", "--gamma", "0.01", "--nprime", "2", "--out", str(d)]) == 0
        assert cli.run_command(["simulate", "--set", str(d / "set_contraction.json"), "--runs", "2",
                                "--steps", "5", "--out", str(d)]) == 0
    for name in ("report_contraction.json", "set_contraction.json", "trace_0.csv", "trace_1.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rep = load_json(a / "report_contraction.json")
    from omegainv.fileio import hybrid_from_dict
    assert hybrid_equal(hybrid_from_dict(rep["result"]), hybrid_from_dict(load_json(a / "set_contraction.json")))


def test_cli_check_and_complexity(tmp_path):
    assert cli.run_command(["check", "--out", str(tmp_path)]) == 0
    assert load_json(tmp_path / "assumptions.json")["passed"]
    assert cli.run_command(["complexity", "--i", "4", "--out", str(tmp_path)]) == 0
    assert load_json(tmp_path / "complexity.json")["worst_case"] == "3456"


def test_cli_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.run_command(["synth-expand", "--bogus"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        cli.run_command([])
    assert exc.value.code == 64


def test_cli_missing_problem_is_error(tmp_path):
    assert cli.run_command(["check", "--problem", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


def test_cli_empty_result_exit_code(tmp_path):
    code = cli.run_command(["synth-contract", "--gamma", "1.0", "--out", str(tmp_path)])
    assert code == 2

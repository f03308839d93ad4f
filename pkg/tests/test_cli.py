import csv
import io

import pytest

from app.cli import run_command
from app.io import load_model, save_graph, save_model
from app.synthetic import random_instance
from tests.conftest import WORKED_GRAPH, WORKED_MODEL

WORKED = ["--graph", str(WORKED_GRAPH), "--model", str(WORKED_MODEL)]


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_certify_poly(capsys):
    assert run_command(["certify", *WORKED, "--local", "1", "--global", "1", "--method", "poly-topk"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0]["node"] == "0"
    assert float(rows[0]["margin"]) == pytest.approx(0.5, abs=1e-9)
    assert rows[0]["certified"] == "true"
    assert rows[0]["counterexample_flips"] == ""


def test_certify_interval(capsys):
    assert run_command(["certify", *WORKED, "--global", "1", "--method", "interval-topk"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert float(rows[0]["margin"]) == pytest.approx(-0.5, abs=1e-9)
    assert rows[0]["certified"] == "false"


def test_sweep_rows(capsys):
    assert run_command(["sweep", *WORKED, "--global-range", "1:5"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [int(r["p_g"]) for r in rows] == [1, 2, 3, 4, 5]
    assert all(float(r["lower"]) <= float(r["upper"]) for r in rows)
    assert list(rows[0]) == ["p_l", "p_g", "lower", "upper", "runtime_ms"]


def test_sweep_local_range(capsys):
    assert run_command(["sweep", *WORKED, "--global-range", "0:1", "--local-range", "1:2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [(r["p_l"], r["p_g"]) for r in rows] == [("1", "0"), ("1", "1"), ("2", "0"), ("2", "1")]


def test_collective(capsys):
    assert run_command(["collective", *WORKED, "--cap", "4"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["max_robust_limit"] for r in rows] == ["1", "1"]
    assert [r["never_certified"] for r in rows] == ["false", "false"]


def test_oracle(capsys):
    assert run_command(["oracle", *WORKED, "--global", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0]["robust"] == "true"
    assert float(rows[0]["min_margin"]) == pytest.approx(0.5)


def test_oracle_infeasible(capsys):
    assert run_command(["oracle", *WORKED, "--global", "3", "--cap", "2"]) == 3
    assert "oracle infeasible" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["certify", *WORKED],
    ["certify", *WORKED, "--global", "1", "--bogus"],
    ["certify", *WORKED, "--global", "1", "--method", "zonotope"],
    ["sweep", *WORKED, "--global-range", "5:1"],
    ["certify", *WORKED, "--global", "1", "--threads", "0"],
])
def test_usage_errors(argv, capsys):
    assert run_command(argv) == 1
    assert capsys.readouterr().err.startswith("❌")


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "graph.json"
    bad.write_text('{"num_nodes": 1, "num_features": 4, "edges": [], "features": [[0, 2, 0, 0]]}', encoding="utf-8")
    assert run_command(["certify", "--graph", str(bad), "--model", str(WORKED_MODEL), "--global", "1"]) == 2
    assert "features[0][1]" in capsys.readouterr().err
    assert run_command(["certify", "--graph", str(tmp_path / "missing.json"), "--model", str(WORKED_MODEL),
                        "--global", "1"]) == 2
    assert run_command(["certify", *WORKED, "--global", "-1"]) == 2


def test_counterexample_writes_file(tmp_path):
    graph, model, _ = random_instance(17, max_nodes=6)
    save_graph(graph, tmp_path / "g.json")
    save_model(model, tmp_path / "m.json")
    files = ["--graph", str(tmp_path / "g.json"), "--model", str(tmp_path / "m.json")]
    out = tmp_path / "out" / "cx.csv"
    assert run_command(["counterexample", *files, "--global", "2", "--output", str(out)]) == 0
    rows = _rows(out.read_text(encoding="utf-8"))
    assert len(rows) == graph.num_nodes
    for r in rows:
        if r["counterexample_flips"]:
            assert r["certified"] == "false"


@pytest.mark.parametrize("command", ["certify", "counterexample"])
def test_threads_give_identical_bytes(tmp_path, command):
    outputs = []
    budgets = {}
    for seed in range(200):
        graph, model, budget = random_instance(seed)
        save_graph(graph, tmp_path / f"g{seed}.json")
        save_model(model, tmp_path / f"m{seed}.json")
        budgets[seed] = [str(budget.local_limit), str(budget.global_limit)]
    for threads in ("1", "8"):
        chunks = []
        for seed in range(200):
            p_l, p_g = budgets[seed]
            out = tmp_path / f"{command}_{seed}_{threads}.csv"
            assert run_command([command, "--graph", str(tmp_path / f"g{seed}.json"),
                                "--model", str(tmp_path / f"m{seed}.json"), "--local", p_l, "--global", p_g,
                                "--threads", threads, "--output", str(out)]) == 0
            chunks.append(out.read_bytes())
        outputs.append(chunks)
    assert outputs[0] == outputs[1]


def test_train_writes_model(tmp_path):
    out = tmp_path / "trained.json"
    assert run_command(["train", *WORKED, "--global", "1", "--steps", "1", "--output", str(out)]) == 0
    model = load_model(out)
    assert model.num_parameters == 16


def test_train_needs_output():
    assert run_command(["train", *WORKED, "--global", "1", "--steps", "1"]) == 1

import json

import pytest

from mesu.cli import main
from mesu.harness import Scenario, SweepSpec


@pytest.fixture
def tiny_scenario(tmp_path):
    path = tmp_path / "tiny.json"
    Scenario(topology="5N6E", stages=2, initial_tasks=6, max_rpacks=2, horizon=0).dump(path)
    return str(path)


def test_gen_topology(tmp_path, capsys):
    out = tmp_path / "t.txt"
    assert main(["gen-topology", "6N8E", "--seed", "3", "--out", str(out)]) == 0
    assert out.read_text().startswith("nodes 6 cloud 5")
    assert main(["gen-topology", "6N3E"]) == 1


def test_plan_writes_identical_traces(tiny_scenario, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["--quiet", "plan", tiny_scenario, "--algo", "H", "--out-trace", str(a)]) == 0
    assert main(["--quiet", "plan", tiny_scenario, "--algo", "H", "--out-trace", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["algorithm"] == "H"


def test_compare_ranks_heuristic_over_deploy_only(tiny_scenario, capsys):
    assert main(["compare", tiny_scenario]) == 0
    lines = capsys.readouterr().out.splitlines()[1:]
    gamma = {line.split()[0]: float(line.split()[1]) for line in lines}
    assert set(gamma) == {"H", "HO", "DF", "UF", "DO"}
    assert gamma["H"] >= gamma["DO"]


def test_export_and_verify(tiny_scenario, tmp_path, capsys):
    lp = tmp_path / "m.lp"
    sol = tmp_path / "s.csv"
    assert main(["--quiet", "export-milp", tiny_scenario, "--out-lp", str(lp),
                 "--solution-from", "H", "--out-solution", str(sol)]) == 0
    assert main(["verify", str(lp) + "-meta", str(sol)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.splitlines()[0].split()[2] == "PASS"
    text = sol.read_text().replace("\ng_1_0,1.0\n", "\ng_1_0,0.5\n")
    sol.write_text(text)
    assert main(["--quiet", "verify", str(lp) + "-meta", str(sol)]) == 1


def test_oracle(tiny_scenario, capsys):
    assert main(["oracle", tiny_scenario, "--algos", "H"]) == 0
    assert "optimum" in capsys.readouterr().out


def test_oracle_guard(tmp_path):
    path = tmp_path / "big.json"
    Scenario(topology="12N20E").dump(path)
    assert main(["--quiet", "oracle", str(path)]) == 1


def test_sweep(tmp_path):
    path = tmp_path / "sweep.json"
    spec = {"schema": "mesu.sweep/1", "axis": "budget", "values": [40, 80], "repetitions": 1,
            "algorithms": ["H"], "base": {"topology": "6N8E"}}
    path.write_text(json.dumps(spec))
    out = tmp_path / "out.csv"
    assert main(["--quiet", "sweep", str(path), "--out-csv", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 + 2


def test_validation_errors(tmp_path):
    assert main(["plan", str(tmp_path / "missing.json")]) == 1
    assert main(["plan", "x.json", "--algo", "ZZ"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "mesu.scenario/1", "stages": 0}')
    assert main(["plan", str(bad)]) == 1
    assert main([]) == 1

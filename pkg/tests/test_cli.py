import json
from importlib import resources
from io import StringIO

import pytest

from cptlab.cli import main

FIX = resources.files("cptlab") / "fixtures"
MODELS = FIX / "models"
SYSTEMS = FIX / "systems"
UNARY = FIX / "battery" / "unary"
GRAPH = FIX / "battery" / "graph"


def cli(*argv):
    out = StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.startswith("{")]


@pytest.mark.parametrize(
    "model, scheme, extra, line",
    [
        (MODELS / "unary8_p3.model", UNARY / "halt.scheme", ["--variant", "1"], "verdict: true stop_t=2 reason=halted"),
        (MODELS / "unary8_p3.model", UNARY / "singleton.scheme", [], "verdict: undefined stop_t=0 reason=budget"),
        (MODELS / "unary8_p4.model", UNARY / "cascade.scheme", ["--variant", "1", "--timing", "const 2"], "verdict: true stop_t=2 reason=halted"),
        (MODELS / "c5.model", GRAPH / "clock.scheme", ["--variant", "3"], "verdict: undefined stop_t=0 reason=budget"),
        (MODELS / "c5.model", GRAPH / "clock.scheme", ["--variant", "1", "--timing", "infinity"], "verdict: true stop_t=5 reason=halted"),
        (MODELS / "c5.model", GRAPH / "singleton.scheme", ["--timing", "poly 2"], "verdict: undefined stop_t=3 reason=budget"),
    ],
)
def test_run_golden_lines(model, scheme, extra, line):
    code, out = cli("run", model, scheme, *extra)
    assert code == 0
    assert out.strip() == line


def test_run_chi_override_and_trace(tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, out = cli("run", MODELS / "unary8_p3.model", UNARY / "halt.scheme", "--variant", "1", "--chi", "forall x P(x)", "--trace-out", trace)
    assert code == 0 and out.strip() == "verdict: false stop_t=2 reason=halted"
    stages = [json.loads(s) for s in trace.read_text().splitlines()]
    assert [s["t"] for s in stages] == [0, 1, 2]


def test_run_errors(capsys):
    assert cli("run", "nope.model", UNARY / "halt.scheme")[0] == 2
    assert cli("run", MODELS / "c5.model", GRAPH / "singleton.scheme", "--variant", "3")[0] == 1
    assert "standard" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["run", str(MODELS / "c5.model")])
    assert exc.value.code == 2


def test_check_system():
    code, out = cli("check-system", SYSTEMS / "c5.system")
    assert code == 0 and all(r["pass"] for r in records(out))
    code, out = cli("check-system", SYSTEMS / "c5_broken_inverse.system")
    assert code == 1
    assert [r["clause"] for r in records(out) if not r["pass"]] == ["B.inverse"]
    code, _ = cli("check-system", SYSTEMS / "unary8_p3.system", "--super")
    assert code == 0
    with pytest.raises(SystemExit):
        main(["check-system", str(SYSTEMS / "c5.system"), "--dichotomy-mode", "sometimes"])


def test_check_witness_and_lifting():
    assert cli("check-witness", SYSTEMS / "c5_self.witness")[0] == 0
    assert cli("check-witness", SYSTEMS / "unary8.witness", "--strength", "super")[0] == 0
    code, out = cli("check-lifting", SYSTEMS / "c5.system", "--scheme", GRAPH / "singleton.scheme", "--steps", "2")
    assert code == 0
    clauses = [r["clause"] for r in records(out)]
    assert any(c.startswith("2:") for c in clauses)


def test_gen_random(tmp_path):
    code, out = cli("--seed", "4", "gen-random", "--n", "6", "--prob", "0.5")
    again = cli("--seed", "4", "gen-random", "--n", "6", "--prob", "0.5")[1]
    assert code == 0 and out == again and out.startswith("model")
    path = tmp_path / "r.model"
    code, out = cli("--seed", "1", "gen-random", "--n", "5", "--vocab", "P/1,E/2", "--out", path, "--check-k", "2", "--check-s", "const 1")
    assert path.read_text().startswith("model")
    assert records(out)[0]["clause"] == "random"


def test_experiment_and_game():
    code, out = cli("experiment", "unary")
    assert code == 0
    verdicts = [r for r in records(out) if "scheme" in r]
    assert len(verdicts) == 5 and all(v["status"] != "mismatch" for v in verdicts)
    code, out = cli("game", MODELS / "c5.model", MODELS / "k4.model", "--k", "2")
    line = json.loads(out)
    assert code == 0 and line["equivalent"] is False and line["formula"]
    assert cli("experiment", "transfer")[0] == 1

import csv
import io
import json
import subprocess
import sys

import pytest

from fjquant import cli
from fjquant.checks import data_text
from fjquant.fjengine import analyze, report
from fjquant.model import load_model
from fjquant.stringmodel import build_endpoint_model

GAUGE = {"name": "g", "dynamical": ["x", "y", "z"], "parameters": [],
         "one_form": ["y", "0", "0"], "potential": "x^2/2"}
TWO_ROUNDS = {"name": "e", "dynamical": ["x", "y", "z", "w"], "parameters": [],
              "one_form": ["y", "0", "0", "0"], "potential": "x*z + y^2/2"}


def run(*argv, stdin=None, monkeypatch=None):
    out = io.StringIO()
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


# --- analyze ---------------------------------------------------------------------

def test_analyze_canonical_pair(tmp_path):
    code, out = run("analyze", "--model", write(tmp_path, "p.json", data_text("canonical_pair.json")))
    assert code == 0
    assert "[q, p] = 1" in out


def test_analyze_string_model_report(tmp_path):
    path = write(tmp_path, "s.json", data_text("string_endpoint.json"))
    code, out = run("analyze", "--model", path, "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "nonsingular"
    assert rep["symplectic_matrix"][2][3] == "2*b*m^2"
    assert rep["symplectic_matrix"][2][4] == "-1"
    assert "b" in rep["vanishing_conditions"]


def test_analyze_z_spectator(tmp_path):
    path = write(tmp_path, "z.json", data_text("z_spectator.json"))
    code, out = run("analyze", "--model", path, "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["rounds"] == 1 and rep["constraint_history"] == [["z"]]


def test_analyze_exit_codes(tmp_path, monkeypatch):
    assert run("analyze", "--model", write(tmp_path, "g.json", GAUGE))[0] == 3
    two = write(tmp_path, "t.json", TWO_ROUNDS)
    assert run("analyze", "--model", two, "--max-rounds", "1")[0] == 2
    monkeypatch.setenv("FJ_MAX_ROUNDS", "1")
    assert run("analyze", "--model", two)[0] == 2
    monkeypatch.setenv("FJ_MAX_ROUNDS", "5")
    assert run("analyze", "--model", two)[0] == 3


def test_analyze_input_errors(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"dynamical": ["q", "p"], "one_form": ["p"],
                                       "potential": "0"})
    assert run("analyze", "--model", bad)[0] == 1
    assert "arity" in capsys.readouterr().err
    assert run("analyze", "--model", str(tmp_path / "missing.json"))[0] == 1
    syntax = write(tmp_path, "syn.json", {"dynamical": ["q"], "one_form": ["q +"],
                                          "potential": "0"})
    assert run("analyze", "--model", syntax)[0] == 1


def test_analyze_json_round_trip(tmp_path):
    path = write(tmp_path, "s.json", data_text("string_endpoint.json"))
    _, out = run("analyze", "--model", path, "--format", "json")
    r, t = analyze(load_model(data_text("string_endpoint.json")))
    assert json.loads(out) == report(r, t)


def test_exit_code_deterministic(tmp_path):
    path = write(tmp_path, "g.json", GAUGE)
    assert len({run("analyze", "--model", path) for _ in range(3)}) == 1


# --- string-model --------------------------------------------------------------------

def test_string_model_pipes_into_analyze(monkeypatch):
    code, doc = run("string-model")
    assert code == 0
    _, out = run("analyze", "--model", "-", "--format", "json", stdin=doc, monkeypatch=monkeypatch)
    r, t = analyze(build_endpoint_model())
    assert json.loads(out) == report(r, t)


def test_string_model_massless(monkeypatch):
    _, doc = run("string-model", "--mass", "0")
    _, out = run("analyze", "--model", "-", "--format", "json", stdin=doc, monkeypatch=monkeypatch)
    pairs = {(b["left"], b["right"]) for b in json.loads(out)["brackets"]}
    assert ("P0_1", "P0_2") not in pairs and ("X1_1", "X1_2") not in pairs
    assert ("X0_1", "X0_2") in pairs


def test_string_model_no_truncate_differs_in_b_squared():
    _, cut = run("string-model")
    _, full = run("string-model", "--no-truncate")
    a, b = json.loads(cut), json.loads(full)
    assert a["one_form"] == b["one_form"]
    assert a["potential"] != b["potential"]
    from fjquant.symexpr import truncate_degree
    mf, mc = load_model(full), load_model(cut)
    diff = mf.potential - mc.potential
    assert all(mono.get("b", 0) >= 2 for _, mono in diff.terms())
    assert truncate_degree(mf.potential, ["b"], 1) == mc.potential


def test_string_model_rejects_zero_b():
    assert run("string-model", "--bfield", "0")[0] == 1


def test_string_model_numeric_overrides():
    _, doc = run("string-model", "--bfield", "1/2", "--mass", "2")
    m = load_model(doc)
    assert "b" not in m.parameter_names and "m" not in m.parameter_names


# --- simulate --------------------------------------------------------------------------

def test_simulate_zero_profile(tmp_path):
    code, _ = run("simulate", "--profile", "zero", "--N", "8", "--steps", "20",
                  "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "trajectory.csv").open()))
    assert rows and all(float(r["X1"]) == 0 == float(r["X2"]) for r in rows)
    diag = list(csv.DictReader((tmp_path / "trajectory_diagnostics.csv").open()))
    assert all(float(v) == 0 for r in diag for k, v in r.items() if k != "time")


def test_simulate_convergence_summary(tmp_path):
    code, out = run("simulate", "--k", "1", "--mass", "1", "--eps-list", "0.1,0.05,0.025",
                    "--out", str(tmp_path))
    assert code == 0
    order = float(out.split("observed order:")[1].split()[0])
    assert abs(order - 2) <= 0.2
    last = list(csv.DictReader((tmp_path / "convergence.csv").open()))[-1]
    assert abs(float(last["omega2"]) - 2) < 0.02


def test_simulate_standing_wave_energy(tmp_path):
    code, _ = run("simulate", "--N", "64", "--steps", "2000", "--every", "10",
                  "--out", str(tmp_path))
    assert code == 0
    e = [float(r["energy"]) for r in csv.DictReader((tmp_path / "trajectory_diagnostics.csv").open())]
    assert max(abs(x - e[0]) for x in e) / e[0] < 1e-4


@pytest.mark.parametrize("argv", [
    ["--dt", "10"], ["--N", "1"], ["--steps", "0"], ["--eps", "-1"],
    ["--eps-list", "0.1,0.2,0.05"], ["--mass", "m"],
])
def test_simulate_invalid_ranges(tmp_path, argv):
    assert run("simulate", "--out", str(tmp_path), *argv)[0] == 1


# --- verify ------------------------------------------------------------------------------

def test_verify_passes():
    code, out = run("verify", "--points", "100")
    assert code == 0
    jac = next(line for line in out.splitlines() if "jacobi" in line)
    assert jac.startswith("PASS") and "100 points" in jac


def test_verify_corrupted_regression(tmp_path):
    doc = json.loads(data_text("reference_matrix.json"))
    doc["entries"][2][3] = "3*m^2*b"
    code, out = run("verify", "--regression", write(tmp_path, "bad.json", doc),
                    "--format", "json")
    rep = json.loads(out)
    assert code == 4 and not rep["passed"]
    failed = [c for c in rep["checks"] if not c["passed"]]
    assert [c["name"] for c in failed] == ["reference_matrix"]
    assert "f[X1_1, X1_2]" in failed[0]["detail"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fjquant.cli", "string-model", "--mass", "0"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["name"] == "string_endpoint"

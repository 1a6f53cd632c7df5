import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from topocorr.anyon_model import model_to_dict, zn
from topocorr.anyonic_state import (
    anyonic_entropy,
    embed,
    random_state,
    save_state,
    sever,
    state_from_dict,
)
from topocorr.cli import RunConfig, UsageError, main, parse_sweep
from topocorr.fusion_space import bipartite_basis
from topocorr.inference import ace, fib4_topo, fib_pure_topo, topological_correlation
from topocorr import fibonacci_states as fs

PHI = (1 + 5**0.5) / 2
D2 = 1 + PHI**2


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return {r[0]: r[1] for r in (line.split(None, 1) for line in text.splitlines()) if len(r) == 2}


@pytest.fixture
def state_file(tmp_path, fib_big_basis):
    path = tmp_path / "rho.json"
    save_state(random_state(fib_big_basis, 5), path)
    return path


def test_model_info_fibonacci(capsys):
    code, out, _ = run_cli(capsys, "model-info", "--builtin", "fibonacci")
    assert code == 0
    rows = rows_of(out)
    assert rows["charges"] == "1, τ"
    assert float(rows["d_τ"]) == pytest.approx(1.6180339887, abs=1e-10)
    assert float(rows["total_qdim"]) == pytest.approx(1.9021130326, abs=1e-10)
    assert rows["pentagon"] == "pass"


@pytest.mark.parametrize("name", ["ising", "z3"])
def test_model_info_json(capsys, name):
    code, out, _ = run_cli(capsys, "model-info", "--builtin", name, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["pentagon"] is True
    assert doc["model"] == name


def test_model_info_bad_file(capsys, tmp_path):
    doc = model_to_dict(zn(2))
    doc["f_symbols"] = [{"a": "e", "b": "e", "ap": "e", "bp": "e", "c": "1", "g": "1", "re": 0.5, "im": 0.0}]
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, "model-info", "--model", str(path))
    assert code == 1
    assert err


def test_usage_errors(capsys):
    assert run_cli(capsys, "entropy")[0] == 2
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys, "model-info", "--builtin", "ising", "--model", "x.json")[0] == 2
    assert run_cli(capsys, "example-fib-pure")[0] == 2
    assert run_cli(capsys, "example-fib4", "--p", "0.5,0.5,0.5,0,0")[0] == 2
    assert run_cli(capsys, "sweep", "--sweep", "q:0.5:0.1:0.1")[0] == 2
    assert run_cli(capsys, "sweep", "--sweep", "x:0:1:0.1")[0] == 2
    with pytest.raises(UsageError):
        RunConfig(command="topo")


def test_missing_state_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "topo", "--state", str(tmp_path / "nope.json"))
    assert code == 1
    assert "file" in err


def test_invalid_state_names_invariant(capsys, tmp_path, fib_basis):
    rho = 2 * fs.pure_state(0.3, fib_basis)
    path = tmp_path / "bad.json"
    save_state(rho, path)
    code, _, err = run_cli(capsys, "entropy", "--state", str(path))
    assert code == 1
    assert "normalization" in err


def test_validate(capsys, state_file):
    code, out, _ = run_cli(capsys, "validate", "--builtin", "ising", "--seed", "3")
    assert code == 0
    assert "pass" in rows_of(out)["sever_checks"]
    code, out, _ = run_cli(capsys, "validate", "--state", str(state_file))
    assert code == 0
    assert rows_of(out)["state"] == "valid"


def test_entropy_and_topo(capsys, state_file):
    rho = state_from_dict(json.loads(state_file.read_text()))
    code, out, _ = run_cli(capsys, "entropy", "--state", str(state_file))
    assert code == 0
    assert float(rows_of(out)["entropy"]) == pytest.approx(anyonic_entropy(rho), abs=1e-10)
    for method in ("sever", "closed-form", "numeric"):
        code, out, _ = run_cli(capsys, "topo", "--state", str(state_file), "--method", method)
        assert code == 0
        assert float(rows_of(out)["c_topo"]) == pytest.approx(topological_correlation(rho), abs=1e-7)
    code, out, _ = run_cli(capsys, "ace", "--state", str(state_file))
    assert float(rows_of(out)["c_ace"]) == pytest.approx(ace(rho), abs=1e-10)


def test_numeric_cap_reports_failure(capsys, state_file):
    code, _, err = run_cli(capsys, "topo", "--state", str(state_file), "--method", "numeric", "--max-iter", "1")
    assert code == 1
    assert "converge" in err


def test_topo_on_factorized_state_is_zero(capsys, tmp_path, fib_big_basis):
    rho = embed(sever(random_state(fib_big_basis, 11)), fib_big_basis)
    path = tmp_path / "f.json"
    save_state(rho, path)
    code, out, _ = run_cli(capsys, "topo", "--state", str(path))
    assert code == 0
    assert rows_of(out)["c_topo"] == "0"


def test_measure_csv_and_json(capsys, state_file):
    code, out, _ = run_cli(capsys, "measure", "--state", str(state_file))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and set(rows[0]) == {"a", "i", "b", "j", "value"}
    code, out, _ = run_cli(capsys, "measure", "--state", str(state_file), "--format", "json")
    assert len(json.loads(out)["record"]) == len(rows)


def test_infer_json_roundtrip(capsys, state_file):
    rho = state_from_dict(json.loads(state_file.read_text()))
    code, out, _ = run_cli(capsys, "infer", "--state", str(state_file), "--format", "json")
    assert code == 0
    sigma = state_from_dict(json.loads(out))
    assert sigma.max_abs_diff(embed(sever(rho), rho.basis)) < 1e-12


def test_limit_check(capsys, tmp_path):
    path = tmp_path / "pure.json"
    save_state(fs.pure_state(0.5), path)
    code, out, _ = run_cli(capsys, "limit-check", "--state", str(path), "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["error"] < 1e-4
    assert len(doc["table"]) == 5
    code, _, _ = run_cli(capsys, "limit-check", "--state", str(path), "--p-seq", "0.1,0.01")
    assert code == 1


def test_example_fib_pure_optimum(capsys):
    code, out, _ = run_cli(capsys, "example-fib-pure", "--q", "0.2763932")
    assert code == 0
    rows = rows_of(out)
    assert float(rows["c_topo"]) == pytest.approx(math.log2(D2), abs=1e-6)
    assert "1/D^2" in rows["note"]
    code, out, _ = run_cli(capsys, "example-fib-pure", "--q", "0.5")
    assert "note" not in rows_of(out)


def test_example_fib4(capsys):
    code, out, _ = run_cli(capsys, "example-fib4", "--p", "0.2,0.2,0.2,0.2,0.2")
    assert code == 0
    assert float(rows_of(out)["c_topo"]) == pytest.approx(fib4_topo([0.2] * 5), abs=1e-10)
    p = fs.locc_point(0.2, 0.2, 0.2)
    code, out, _ = run_cli(capsys, "example-fib4", "--p", ",".join(repr(x) for x in p))
    rows = rows_of(out)
    assert rows["c_topo"] == "0"
    assert "note" in rows


@pytest.mark.parametrize("cmd", [["example-fib-pure", "--q", "0.3"], ["example-fib4", "--p", "0.1,0.2,0.3,0.25,0.15"]])
def test_example_json_roundtrip(capsys, cmd):
    code, out, _ = run_cli(capsys, *cmd, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    rho = state_from_dict(doc["state"])
    again = state_from_dict(json.loads(json.dumps(doc["state"])))
    assert rho.max_abs_diff(again) == 0
    assert topological_correlation(rho) == pytest.approx(doc["c_topo"], abs=1e-12)
    assert anyonic_entropy(rho) == pytest.approx(doc["entropy_rho"], abs=1e-12)


def test_sweep_q(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--sweep", "q:0.01:0.99:0.01")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "param,entropy_rho,entropy_inferred,c_topo,c_ace"
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    assert len(data) == 99
    assert np.all(np.diff(data[:, 0]) > 0)
    best = data[np.argmax(data[:, 3]), 0]
    assert best == pytest.approx(0.28)
    assert abs(best - 1 / D2) <= 0.01
    for q, c in data[:, [0, 3]]:
        assert c == pytest.approx(fib_pure_topo(q), abs=1e-10)
    assert np.allclose(data[:, 3], data[:, 4], atol=1e-12)


def test_sweep_ratio_minimum_at_locc_point(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--sweep", "ratio:0.1:2:0.001", "--p", "0.1,0.2,0.3,0.2,0.2")
    assert code == 0
    data = np.array([[float(x) for x in line.split(",")] for line in out.splitlines()[1:]])
    k = np.argmin(data[:, 3])
    assert abs(data[k, 0] - 1 / PHI) <= 0.001
    assert abs(data[k, 3]) < 1e-5


def test_sweep_single_row_matches_point(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--sweep", "q:0.3:0.3:0.1")
    lines = out.splitlines()
    assert len(lines) == 2
    _, point, _ = run_cli(capsys, "example-fib-pure", "--q", "0.3")
    assert lines[1].split(",")[3] == rows_of(point)["c_topo"]


def test_sweep_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"s{k}.csv"
        assert main(["sweep", "--sweep", "q:0.05:0.95:0.05", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_parse_sweep_grid():
    var, grid = parse_sweep("q:0.05:0.95:0.05")
    assert var == "q"
    assert len(grid) == 19
    assert grid[-1] == 0.95


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "topocorr", "model-info", "--builtin", "z2"], capture_output=True, text=True
    )
    assert res.returncode == 0
    assert "pentagon" in res.stdout

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qjsdkit import io as qio
from qjsdkit.cli import run
from qjsdkit.phase_space import gaussian_state
from qjsdkit.spectral import PAULI_X, PAULI_Z


def cli(*args, env=None):
    full_env = {**os.environ, **(env or {})}
    return subprocess.run(
        [sys.executable, "-m", "qjsdkit.cli", *map(str, args)],
        capture_output=True,
        text=True,
        env=full_env,
    )


@pytest.fixture
def files(tmp_path):
    def put(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return {
        "x": put("x.json", qio.operator_to_json(PAULI_X)),
        "z": put("z.json", qio.operator_to_json(PAULI_Z)),
        "psi": put("psi.json", qio.ket_to_json(np.array([0.8, 0.6j]))),
        "anom": put("anom.json", qio.ket_to_json(np.array([1, 0.1]) / np.hypot(1, 0.1))),
        "f": put("f.json", [{"point": [a, b], "value": [a * b + a, 0]} for a in (-1, 1) for b in (-1, 1)]),
        "gauss": put("gauss.json", {"kind": "gaussian"}),
        "short": put("short.json", qio.ket_to_json(np.array([0.9, 0]))),
        "dir": tmp_path,
    }


def run_json(capsys, *args):
    assert run([str(a) for a in args]) == 0
    return json.loads(capsys.readouterr().out)


def test_qjp_sums_to_one(files):
    res = cli("qjp", "--obs", files["x"], "--obs", files["z"], "--hash", "kd", "--state", files["psi"])
    assert res.returncode == 0, res.stderr
    lines = res.stdout.splitlines()
    assert lines[0] == "a,b,re,im"
    vals = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert abs(vals[:, 2].sum() - 1) <= 1e-12 and abs(vals[:, 3].sum()) <= 1e-12


def test_wigner_q_marginal(files):
    out = files["dir"] / "w.csv"
    res = cli("wigner", "--state", files["gauss"], "--n", 256, "--domain", "-10:10", "--out", out)
    assert res.returncode == 0, res.stderr
    W = qio.read_grid(out)
    psi = gaussian_state(256, (-10, 10))
    assert np.max(np.abs(W.q_marginal() - np.abs(psi.samples) ** 2)) <= 1e-6


def test_verify_all():
    res = cli("verify", "--suite", "all", "--seed", 7)
    assert res.returncode == 0, res.stdout
    lines = res.stdout.splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert "max_residual=" in lines[0]


def test_deterministic_output(files):
    args = ("qjp", "--obs", files["x"], "--obs", files["z"], "--alpha", "0.3+0.7i", "--state", files["psi"])
    assert cli(*args).stdout == cli(*args).stdout
    a = cli("verify", "--suite", "stats", "--seed", 3).stdout
    assert a == cli("verify", "--suite", "stats", "--seed", 3).stdout


def test_usage_errors():
    res = cli("frobnicate")
    assert res.returncode == 2
    assert json.loads(res.stderr)["error"] == "usage"
    assert cli("qjp", "--state", "x.json").returncode == 2


def test_domain_errors(files):
    res = cli("spectra", "--obs", files["dir"] / "nope.json")
    assert res.returncode == 1
    assert json.loads(res.stderr)["error"] == "unreadable-file"
    res = cli("qjp", "--obs", files["x"], "--obs", files["z"], "--state", files["short"])
    assert res.returncode == 1
    err = json.loads(res.stderr)
    assert err["error"] == "normalization"
    assert cli("qjp", "--obs", files["x"], "--obs", files["z"], "--state", files["short"], "--renormalize").returncode == 0


def test_error_codes_are_distinct(files):
    bad = files["dir"] / "bad.json"
    bad.write_text(json.dumps({"dim": 2}))
    codes = {
        json.loads(cli("spectra", "--obs", files["dir"] / "nope.json").stderr)["error"],
        json.loads(cli("spectra", "--obs", bad).stderr)["error"],
        json.loads(cli("nope").stderr)["error"],
    }
    assert len(codes) == 3


def test_thread_env(files):
    res = cli("spectra", "--obs", files["z"], env={"QJSD_NUM_THREADS": "1"})
    assert res.returncode == 0
    assert cli("spectra", "--obs", files["z"], env={"QJSD_NUM_THREADS": "zero"}).returncode == 2


def test_out_file_matches_stdout(files, capsys):
    out = files["dir"] / "p.csv"
    assert run(["qjp", "--obs", files["x"], "--obs", files["z"], "--state", files["psi"], "--out", str(out)]) == 0
    assert run(["qjp", "--obs", files["x"], "--obs", files["z"], "--state", files["psi"], "--out", "-"]) == 0
    assert capsys.readouterr().out == out.read_text()


def test_spectra(files, capsys):
    assert run(["spectra", "--obs", files["z"], "--state", files["psi"]]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "axis,eigenvalue,multiplicity,probability"
    probs = {float(r.split(",")[1]): float(r.split(",")[3]) for r in rows[1:]}
    assert probs[1.0] == pytest.approx(0.64) and probs[-1.0] == pytest.approx(0.36)


def test_quantise_and_adjoint(files, capsys):
    op = run_json(capsys, "quantise", "--obs", files["x"], "--obs", files["z"], "--hash", "mh", "--function", files["f"])
    assert op["dim"] == 2
    res = run_json(capsys, "verify-adjoint", "--obs", files["x"], "--obs", files["z"], "--function", files["f"], "--state", files["psi"])
    assert res["passed"] and res["residual"] <= 1e-9


def test_faithfulness(files, capsys):
    assert run_json(capsys, "faithfulness", "--obs", files["x"], "--obs", files["z"])["rank"] == 4
    assert run_json(capsys, "faithfulness", "--obs", files["z"])["rank"] == 2


def test_weak_value_anomalous(files, capsys):
    res = run_json(capsys, "weak-value", "--obs", files["x"], "--obs", files["z"], "--state", files["anom"], "--post-select", "-1", "--alpha", "i")
    assert res["weak_value"][0] == pytest.approx(10, abs=1e-9)
    assert res["two_state_value"] == pytest.approx([10, 0], abs=1e-9)


def test_cond_exp_and_covariance(files, capsys):
    ce = run_json(capsys, "cond-exp", "--obs", files["x"], "--obs", files["z"], "--state", files["anom"], "--hash", "kd")
    by_b = {a["b"]: a["value"][0] for a in ce["atoms"]}
    assert by_b[-1.0] == pytest.approx(10, abs=1e-9)
    cv = run_json(capsys, "covariance", "--obs", files["x"], "--obs", files["z"], "--state", files["psi"], "--alpha", "1")
    assert cv["covariance"][0] == pytest.approx(cv["symmetric"], abs=1e-12)
    assert cv["covariance"][1] == pytest.approx(cv["antisymmetric"], abs=1e-12)


def test_phase_space_pipeline(files, capsys):
    w = files["dir"] / "w.csv"
    assert run(["wigner", "--state", files["gauss"], "--n", "64", "--domain", "-8:8", "--out", str(w)]) == 0
    W = qio.read_grid(w)
    for cmd, extra in (("cohen", ["--kernel", "mh"]), ("husimi", []), ("gs", ["--eps", "1e-6"])):
        out = files["dir"] / f"{cmd}.csv"
        assert run([cmd, "--grid", str(w), "--out", str(out), *extra]) == 0
        G = qio.read_grid(out)
        expected = W.mass() / (1 + 1e-6) if cmd == "gs" else W.mass()
        assert G.mass() == pytest.approx(expected, abs=1e-9)
    assert run(["cohen", "--state", files["gauss"], "--n", "64", "--domain", "-8:8", "--kernel", "nope"]) == 1
    assert json.loads(capsys.readouterr().err)["error"]
    assert run(["husimi"]) == 2

import io
import json

import numpy as np
import pytest

from qjsdkit import io as qio
from qjsdkit.errors import (
    GridMismatchError,
    HashingSpecError,
    InvariantViolationError,
    NormalizationError,
    SchemaError,
    UnreadableFileError,
)
from qjsdkit.phase_space import gaussian_state, hermite_state, wigner
from qjsdkit.qjsd import alpha_hashing, build_qjsd, kappa_hashing
from qjsdkit.spectral import PAULI_X, PAULI_Z, random_density
from qjsdkit.transform import quasi_classicalise


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_operator_round_trip(tmp_path):
    path = write(tmp_path, "z.json", qio.operator_to_json(PAULI_Z))
    op = qio.load_operator(path)
    np.testing.assert_array_equal(op.entries, PAULI_Z)


def test_non_hermitian_reports_residual(tmp_path):
    M = np.array(PAULI_Z, dtype=complex)
    M[0, 1] = 1e-3
    with pytest.raises(InvariantViolationError) as err:
        qio.load_operator(write(tmp_path, "bad.json", qio.operator_to_json(M)))
    assert err.value.residual == pytest.approx(1e-3)
    assert err.value.to_dict()["error"] == "invariant-violation"


@pytest.mark.parametrize(
    "data,pointer",
    [
        ({"matrix": []}, "/dim"),
        ({"dim": 2}, "/matrix"),
        ({"dim": 2, "matrix": [[[1, 0], [0, 0]]]}, "/matrix"),
        ({"dim": 2, "matrix": [[[1, 0], [0, 0]], [[0, 0], [1]]]}, "/matrix/1/1"),
        ({"dim": 2, "matrix": [[[1, 0], [0, 0]], [[0, 0], ["x", 0]]]}, "/matrix/1/1/0"),
    ],
)
def test_schema_pointer(tmp_path, data, pointer):
    with pytest.raises(SchemaError) as err:
        qio.load_operator(write(tmp_path, "op.json", data))
    assert err.value.pointer == pointer


def test_unreadable(tmp_path):
    with pytest.raises(UnreadableFileError):
        qio.load_operator(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UnreadableFileError):
        qio.load_operator(bad)


def test_ket_promotion_and_renormalize(tmp_path):
    ket = write(tmp_path, "k.json", {"dim": 2, "kind": "ket", "matrix": [[0.6, 0], [0, 0.8]]})
    rho = qio.load_state(ket)
    np.testing.assert_allclose(rho.entries, [[0.36, -0.48j], [0.48j, 0.64]], atol=1e-15)
    short = write(tmp_path, "s.json", {"dim": 2, "kind": "ket", "matrix": [[0.9, 0], [0, 0]]})
    with pytest.raises(NormalizationError) as err:
        qio.load_state(short)
    assert err.value.details["norm"] == pytest.approx(0.9)
    np.testing.assert_allclose(qio.load_state(short, renormalize=True).entries, np.diag([1, 0]))


def test_density_checks(tmp_path):
    R = random_density(3, np.random.default_rng(0))
    np.testing.assert_allclose(qio.load_state(write(tmp_path, "r.json", qio.density_to_json(R))).entries, R, atol=1e-15)
    with pytest.raises(NormalizationError):
        qio.load_state(write(tmp_path, "t.json", qio.density_to_json(2 * R)))
    with pytest.raises(InvariantViolationError):
        qio.load_state(write(tmp_path, "n.json", qio.density_to_json(np.diag([1.5, -0.5]))))
    with pytest.raises(SchemaError):
        qio.load_state(write(tmp_path, "k.json", {"dim": 1, "kind": "mixed", "matrix": [[[1, 0]]]}))


def test_hashing_files(tmp_path):
    spec = kappa_hashing(0.5)
    assert qio.resolve_hashing(str(write(tmp_path, "h.json", spec.to_json()))) == spec
    assert qio.resolve_hashing("alpha:0.3+0.7i") == alpha_hashing(0.3 + 0.7j)
    bad = spec.to_json()
    bad["terms"][0]["factors"][0]["axis"] = 3
    with pytest.raises(HashingSpecError):
        qio.resolve_hashing(str(write(tmp_path, "b.json", bad)))
    del bad["terms"][0]["coeff"]
    with pytest.raises(SchemaError) as err:
        qio.resolve_hashing(str(write(tmp_path, "c.json", bad)))
    assert err.value.pointer == "/terms/0/coeff"


def test_tabulated_function(tmp_path):
    path = write(tmp_path, "f.json", [{"point": [1, -1], "value": [2, 0.5]}, {"point": [0.5], "value": [0, 1]}])
    assert qio.load_tabulated(path) == {(1.0, -1.0): 2 + 0.5j, (0.5,): 1j}


def test_qjp_csv_round_trip(tmp_path):
    rho = random_density(2, np.random.default_rng(1))
    P = quasi_classicalise(build_qjsd(alpha_hashing(1), [PAULI_X, PAULI_Z]), rho)
    path = tmp_path / "p.csv"
    with qio.open_output(path) as out:
        qio.write_qjp_csv(P, out)
    assert path.read_text().splitlines()[0] == "a,b,re,im"
    back = qio.read_qjp_csv(path)
    assert np.max(np.abs(back.values - P.values)) <= 1e-15
    np.testing.assert_array_equal(back.points, P.points)


def test_grid_round_trip(tmp_path):
    W = wigner(hermite_state(1))
    path = tmp_path / "w.csv"
    qio.write_grid(W, path)
    meta = json.loads((tmp_path / "w.csv.json").read_text())
    assert meta["q"]["length"] == 256 and "convention" in meta
    back = qio.read_grid(path)
    assert np.max(np.abs(back.values - W.values)) == 0
    assert back.q == W.q and back.p == W.p
    lines = path.read_text().splitlines()
    assert lines[0] == "q,p,re,im"
    assert float(lines[1].split(",")[1]) < float(lines[2].split(",")[1])


def test_csv_is_deterministic():
    W = wigner(gaussian_state(n=32, domain=(-6, 6)))
    a, b = io.StringIO(), io.StringIO()
    qio.write_grid_csv(W, a)
    qio.write_grid_csv(W, b)
    assert a.getvalue() == b.getvalue()


def test_wavefunction_files(tmp_path):
    psi = hermite_state(2, n=64, domain=(-8, 8))
    path = write(tmp_path, "w.json", qio.wavefunction_to_json(psi))
    back = qio.load_wavefunction(path)
    np.testing.assert_array_equal(back.samples, psi.samples)
    assert back.dq == psi.dq and back.q0 == psi.q0
    with pytest.raises(GridMismatchError):
        qio.load_wavefunction(path, n=128)
    g = qio.load_wavefunction(write(tmp_path, "g.json", {"kind": "gaussian", "width": 1.2}), 128, (-6, 6))
    assert g.n == 128 and g.q0 == -6
    sup = {"kind": "superposition", "terms": [
        {"state": {"kind": "hermite", "level": 0}, "coeff": [1, 0]},
        {"state": {"kind": "hermite", "level": 1}, "coeff": [0, 1]},
    ]}
    assert qio.load_wavefunction(write(tmp_path, "s.json", sup)).norm_squared() == pytest.approx(1)

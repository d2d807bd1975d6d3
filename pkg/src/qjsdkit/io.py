"""File formats: operator, state, hashing, tabulated-function and grid files.

Operators and states are JSON objects with ``"dim"`` and ``"matrix"`` (rows of
``[re, im]`` pairs). States add ``"kind"``: ``"density"`` or ``"ket"``; a ket
holds a length-``dim`` list of pairs and is promoted to a pure density.
Numeric output is written with 17 significant digits so that every emitted
file reads back exactly.
"""

from __future__ import annotations

import csv
import json
import math
import string
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    GridMismatchError,
    HashingSpecError,
    InvariantViolationError,
    NormalizationError,
    SchemaError,
    UnreadableFileError,
)
from .phase_space import (
    CONVENTION,
    DEFAULT_DOMAIN,
    DEFAULT_N,
    GridAxis,
    PhaseSpaceGrid,
    WavefunctionGrid,
    gaussian_state,
    hermite_state,
    superposition,
)
from .qjsd import DiscreteQJSD, HashingSpec, QJPDistribution, hashing_preset
from .spectral import HERMITICITY_TOL, DensityOperator, HermitianOperator, hermiticity_residual

STATE_TRACE_TOL = 1e-10
FLOAT_FORMAT = "{:.16e}"


def fmt(x: float) -> str:
    return FLOAT_FORMAT.format(float(x))


def read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}", path=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UnreadableFileError(f"{path} is not valid JSON: {exc}", path=str(path)) from None


def _require(data: Any, key: str, pointer: str = "") -> Any:
    if not isinstance(data, dict):
        raise SchemaError("expected a JSON object", pointer or "/")
    if key not in data:
        raise SchemaError(f"missing field {key!r}", f"{pointer}/{key}")
    return data[key]


def _number(x: Any, pointer: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError("expected a number", pointer)
    if not math.isfinite(x):
        raise SchemaError("expected a finite number", pointer)
    return float(x)


def _complex(pair: Any, pointer: str) -> complex:
    if not isinstance(pair, list) or len(pair) != 2:
        raise SchemaError("expected a [re, im] pair", pointer)
    return complex(_number(pair[0], f"{pointer}/0"), _number(pair[1], f"{pointer}/1"))


def _complex_vector(data: Any, length: int | None, pointer: str) -> np.ndarray:
    if not isinstance(data, list):
        raise SchemaError("expected an array", pointer)
    if length is not None and len(data) != length:
        raise SchemaError(f"expected {length} entries, found {len(data)}", pointer)
    return np.array([_complex(x, f"{pointer}/{i}") for i, x in enumerate(data)], dtype=complex)


def _dim(data: Any) -> int:
    dim = _require(data, "dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim must be a positive integer", "/dim")
    return dim


def _complex_matrix(data: Any, dim: int) -> np.ndarray:
    rows = _require(data, "matrix")
    if not isinstance(rows, list) or len(rows) != dim:
        raise SchemaError(f"matrix must have {dim} rows", "/matrix")
    return np.array([_complex_vector(r, dim, f"/matrix/{i}") for i, r in enumerate(rows)])


def parse_operator(data: Any) -> HermitianOperator:
    dim = _dim(data)
    M = _complex_matrix(data, dim)
    residual = hermiticity_residual(M)
    if residual > HERMITICITY_TOL * max(1.0, float(np.max(np.abs(M)))):
        raise InvariantViolationError(
            f"matrix is not Hermitian (residual {residual:.3e})", residual=residual
        )
    return HermitianOperator(M)


def parse_state(data: Any, renormalize: bool = False) -> DensityOperator:
    dim = _dim(data)
    kind = data.get("kind", "density")
    if kind == "ket":
        key = "vector" if "vector" in data else "matrix"
        vec = _complex_vector(_require(data, key), dim, f"/{key}")
        norm = float(np.linalg.norm(vec))
        if norm == 0:
            raise InvariantViolationError("ket is zero", residual=1.0)
        if abs(norm**2 - 1) > STATE_TRACE_TOL and not renormalize:
            raise NormalizationError(f"ket has norm {norm!r}; pass --renormalize to rescale", norm=norm)
        vec = vec / norm
        return DensityOperator(np.outer(vec, vec.conj()))
    if kind != "density":
        raise SchemaError(f"unknown state kind {kind!r}", "/kind")
    R = _complex_matrix(data, dim)
    residual = hermiticity_residual(R)
    if residual > HERMITICITY_TOL:
        raise InvariantViolationError(
            f"density matrix is not Hermitian (residual {residual:.3e})", residual=residual
        )
    R = (R + R.conj().T) / 2
    trace = float(np.trace(R).real)
    if abs(trace - 1) > STATE_TRACE_TOL:
        if not renormalize or trace <= 0:
            raise NormalizationError(f"density matrix has trace {trace!r}", trace=trace)
        R = R / trace
    lowest = float(np.linalg.eigvalsh(R)[0])
    if lowest < -1e-10:
        raise InvariantViolationError(
            f"density matrix has negative eigenvalue {lowest:.3e}", residual=-lowest
        )
    return DensityOperator(R)


def load_operator(path: str | Path) -> HermitianOperator:
    return parse_operator(read_json(path))


def load_state(path: str | Path, renormalize: bool = False) -> DensityOperator:
    return parse_state(read_json(path), renormalize)


def _pairs(values: Iterable[complex]) -> list[list[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def operator_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"dim": M.shape[0], "matrix": [_pairs(row) for row in M]}


def ket_to_json(vec) -> dict:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return {"dim": vec.size, "kind": "ket", "matrix": _pairs(vec)}


def density_to_json(R) -> dict:
    return {"kind": "density", **operator_to_json(R)}


def write_json(data: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def parse_hashing(data: Any) -> HashingSpec:
    n_axes = _require(data, "n_axes")
    if isinstance(n_axes, bool) or not isinstance(n_axes, int) or n_axes < 1:
        raise SchemaError("n_axes must be a positive integer", "/n_axes")
    terms = _require(data, "terms")
    if not isinstance(terms, list) or not terms:
        raise SchemaError("terms must be a non-empty array", "/terms")
    for i, term in enumerate(terms):
        _complex(_require(term, "coeff", f"/terms/{i}"), f"/terms/{i}/coeff")
        factors = _require(term, "factors", f"/terms/{i}")
        if not isinstance(factors, list):
            raise SchemaError("factors must be an array", f"/terms/{i}/factors")
        for j, factor in enumerate(factors):
            ptr = f"/terms/{i}/factors/{j}"
            axis = _require(factor, "axis", ptr)
            if isinstance(axis, bool) or not isinstance(axis, int):
                raise SchemaError("axis must be an integer", f"{ptr}/axis")
            if not 1 <= axis <= n_axes:
                raise HashingSpecError(f"axis {axis} outside 1..{n_axes}", pointer=f"{ptr}/axis")
            _number(_require(factor, "fraction", ptr), f"{ptr}/fraction")
    return HashingSpec.from_json(data)


def resolve_hashing(text: str) -> HashingSpec:
    """A named preset or the path of a hashing file."""
    if Path(text).suffix == ".json" or Path(text).is_file():
        return parse_hashing(read_json(text))
    return hashing_preset(text)


def load_tabulated(path: str | Path) -> dict[tuple[float, ...], complex]:
    """Tabulated function file: ``[{"point": [...], "value": [re, im]}, ...]``."""
    data = read_json(path)
    if not isinstance(data, list):
        raise SchemaError("expected an array of {point, value} entries", "/")
    table = {}
    for i, entry in enumerate(data):
        point = _require(entry, "point", f"/{i}")
        if not isinstance(point, list):
            point = [point]
        coords = tuple(_number(x, f"/{i}/point/{k}") for k, x in enumerate(point))
        table[coords] = _complex(_require(entry, "value", f"/{i}"), f"/{i}/value")
    return table


def parse_wavefunction(data: Any, n: int | None = None, domain=None) -> WavefunctionGrid:
    """Sampled (``"wavefunction"``) or analytic (``"gaussian"``, ``"hermite"``,
    ``"superposition"``) wave-function description."""
    kind = _require(data, "kind")
    n_ = DEFAULT_N if n is None else n
    dom = DEFAULT_DOMAIN if domain is None else domain
    if kind == "wavefunction":
        samples = _complex_vector(_require(data, "samples"), None, "/samples")
        size = samples.size
        if n is not None and n != size:
            raise GridMismatchError(f"file holds {size} samples but --n is {n}")
        if "q0" in data or "dq" in data:
            q0 = _number(_require(data, "q0"), "/q0")
            dq = _number(_require(data, "dq"), "/dq")
        else:
            q0, dq = dom[0], (dom[1] - dom[0]) / max(size, 1)
        return WavefunctionGrid(q0, dq, samples)
    if kind == "gaussian":
        params = {k: _number(data[k], f"/{k}") for k in ("center", "momentum", "width") if k in data}
        return gaussian_state(n_, dom, **params)
    if kind == "hermite":
        level = _require(data, "level")
        if isinstance(level, bool) or not isinstance(level, int) or level < 0:
            raise SchemaError("level must be a nonnegative integer", "/level")
        return hermite_state(level, n_, dom)
    if kind == "superposition":
        terms = _require(data, "terms")
        if not isinstance(terms, list) or not terms:
            raise SchemaError("terms must be a non-empty array", "/terms")
        states, coeffs = [], []
        for i, t in enumerate(terms):
            states.append(parse_wavefunction(_require(t, "state", f"/terms/{i}"), n_, dom))
            coeffs.append(_complex(_require(t, "coeff", f"/terms/{i}"), f"/terms/{i}/coeff"))
        return superposition(states, coeffs)
    raise SchemaError(f"unknown wave-function kind {kind!r}", "/kind")


def load_wavefunction(path: str | Path, n: int | None = None, domain=None) -> WavefunctionGrid:
    return parse_wavefunction(read_json(path), n, domain)


def wavefunction_to_json(psi: WavefunctionGrid) -> dict:
    return {"kind": "wavefunction", "q0": psi.q0, "dq": psi.dq, "samples": _pairs(psi.samples)}


@contextmanager
def open_output(path: str | Path | None):
    """Text sink for ``path``; ``-`` or ``None`` is standard output."""
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def write_csv(header: Sequence[str], rows: Iterable[Sequence[float]], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])


def axis_labels(n_axes: int) -> list[str]:
    return list(string.ascii_lowercase[:n_axes]) if n_axes <= 26 else [f"x{k + 1}" for k in range(n_axes)]


def qjp_rows(P: QJPDistribution):
    for point, value in zip(P.points, P.values):
        yield [*point, value.real, value.imag]


def write_qjp_csv(P: QJPDistribution, out) -> None:
    write_csv(axis_labels(P.n_axes) + ["re", "im"], qjp_rows(P), out)


def read_qjp_csv(path: str | Path) -> QJPDistribution:
    rows = _read_csv(path)
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    n = len(header) - 2
    return QJPDistribution(body[:, :n], body[:, n] + 1j * body[:, n + 1])


def _read_csv(path: str | Path) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}", path=str(path)) from None
    if not rows:
        raise SchemaError("empty CSV file", "/")
    return rows


def qjsd_to_json(Q: DiscreteQJSD) -> dict:
    return {
        "n_axes": Q.n_axes,
        "dim": Q.dim,
        "support": [
            {"point": [float(x) for x in p], "weight": [_pairs(row) for row in W]}
            for p, W in zip(Q.points, Q.weights)
        ],
    }


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def grid_metadata(grid: PhaseSpaceGrid) -> dict:
    return {"q": grid.q.to_json(), "p": grid.p.to_json(), "convention": grid.convention}


def write_grid_csv(grid: PhaseSpaceGrid, out) -> None:
    """Rows ``q,p,re,im`` with ``p`` varying fastest."""
    Q, P = grid.mesh()
    vals = grid.values
    rows = zip(Q.ravel(), P.ravel(), vals.real.ravel(), vals.imag.ravel())
    write_csv(["q", "p", "re", "im"], rows, out)


def write_grid(grid: PhaseSpaceGrid, path: str | Path | None) -> None:
    """CSV plus sidecar metadata; streaming to stdout omits the sidecar."""
    with open_output(path) as out:
        write_grid_csv(grid, out)
    if path is not None and str(path) != "-":
        write_json(grid_metadata(grid), sidecar_path(path))


def read_grid(path: str | Path) -> PhaseSpaceGrid:
    meta = read_json(sidecar_path(path))
    axes = []
    for name in ("q", "p"):
        spec = _require(meta, name)
        axes.append(
            GridAxis(
                _number(_require(spec, "origin", f"/{name}"), f"/{name}/origin"),
                _number(_require(spec, "step", f"/{name}"), f"/{name}/step"),
                int(_require(spec, "length", f"/{name}")),
            )
        )
    rows = _read_csv(path)
    if rows[0] != ["q", "p", "re", "im"]:
        raise SchemaError("grid CSV header must be q,p,re,im", "/0")
    body = np.array(rows[1:], dtype=float)
    n = axes[0].length
    if body.shape != (n * axes[1].length, 4):
        raise GridMismatchError("grid CSV does not match its metadata")
    values = (body[:, 2] + 1j * body[:, 3]).reshape(n, axes[1].length)
    return PhaseSpaceGrid(axes[0], axes[1], values, meta.get("convention", CONVENTION))


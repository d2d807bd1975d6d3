"""Hermitian eigenstructure, spectral measures and the Born rule.

This is the commutative baseline: observables with a common eigenbasis have a
joint spectral measure, a functional calculus and an ordinary (nonnegative)
joint probability distribution on any density operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    CommutativityError,
    DimensionMismatchError,
    InvalidOperatorError,
    NonFiniteValueError,
)

HERMITICITY_TOL = 1e-12
PROJECTOR_TOL = 1e-10
COMMUTE_TOL = 1e-10
NEGATIVE_PROBABILITY_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _as_square(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidOperatorError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidOperatorError("matrix has non-finite entries")
    return arr


def hermiticity_residual(matrix) -> float:
    arr = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix; stored in symmetrized form."""

    entries: np.ndarray
    tol: float = HERMITICITY_TOL

    def __post_init__(self) -> None:
        arr = _as_square(self.entries)
        residual = hermiticity_residual(arr)
        if residual > self.tol * max(1.0, float(np.max(np.abs(arr)))):
            raise InvalidOperatorError(
                f"operator is not Hermitian (residual {residual:.3e})", residual=residual
            )
        object.__setattr__(self, "entries", _frozen((arr + arr.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit trace."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_square(self.entries)
        residual = hermiticity_residual(arr)
        if residual > HERMITICITY_TOL:
            raise InvalidOperatorError(
                f"density operator is not Hermitian (residual {residual:.3e})", residual=residual
            )
        arr = (arr + arr.conj().T) / 2
        trace = np.trace(arr).real
        if abs(trace - 1.0) > 1e-10:
            raise InvalidOperatorError(f"density operator has trace {trace!r}", residual=abs(trace - 1))
        lowest = float(np.linalg.eigvalsh(arr)[0])
        if lowest < -1e-10:
            raise InvalidOperatorError(
                f"density operator has negative eigenvalue {lowest:.3e}", residual=-lowest
            )
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_ket(cls, ket) -> "DensityOperator":
        vec = np.asarray(ket, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidOperatorError("zero ket")
        vec = vec / norm
        return cls(np.outer(vec, vec.conj()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _matrix(op) -> np.ndarray:
    if isinstance(op, (HermitianOperator, DensityOperator)):
        return op.entries
    return np.asarray(op, dtype=complex)


def _as_hermitian(op) -> HermitianOperator:
    return op if isinstance(op, HermitianOperator) else HermitianOperator(op)


@dataclass(frozen=True)
class SpectralMeasure:
    """Eigenvalue to orthogonal projector map, ascending in eigenvalue."""

    eigenvalues: np.ndarray
    projectors: np.ndarray  # shape (n_atoms, dim, dim)
    tol: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        projs = np.asarray(self.projectors, dtype=complex)
        if projs.ndim != 3 or projs.shape[0] != vals.size:
            raise InvalidOperatorError("projector stack does not match eigenvalue list")
        if vals.size > 1 and np.any(np.diff(vals) <= 0):
            raise InvalidOperatorError("eigenvalues must be strictly increasing")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "projectors", _frozen(projs))

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    @property
    def atoms(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.eigenvalues.tolist(), self.projectors))

    def __len__(self) -> int:
        return self.eigenvalues.size

    def projector(self, value: float, tol: float | None = None) -> np.ndarray:
        """Projector of the atom closest to ``value``; raises if none within ``tol``."""
        tol = max(self.tol, 1e-9) if tol is None else tol
        idx = int(np.argmin(np.abs(self.eigenvalues - value)))
        if abs(self.eigenvalues[idx] - value) > tol:
            raise KeyError(value)
        return self.projectors[idx]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ijk->jk", self.eigenvalues, self.projectors)

    def invariant_residuals(self) -> dict[str, float]:
        """Max-abs residuals of idempotence, hermiticity, orthogonality, completeness."""
        P = self.projectors
        eye = np.eye(self.dim)
        idem = max(float(np.max(np.abs(p @ p - p))) for p in P)
        herm = max(hermiticity_residual(p) for p in P)
        orth = 0.0
        for i in range(len(P)):
            for j in range(i + 1, len(P)):
                orth = max(orth, float(np.max(np.abs(P[i] @ P[j]))))
        comp = float(np.max(np.abs(P.sum(axis=0) - eye)))
        return {"idempotent": idem, "hermitian": herm, "orthogonal": orth, "complete": comp}


def eigendecompose(H, tol: float | None = None) -> SpectralMeasure:
    """Spectral measure of a Hermitian operator.

    Eigenvalues closer than ``tol`` (single linkage along the sorted spectrum)
    are merged into one atom whose eigenvalue is the cluster mean and whose
    projector is the sum of the rank-one projectors. The default threshold is
    ``1e-8`` times the spectral radius.
    """
    H = _as_hermitian(H)
    values, vectors = np.linalg.eigh(H.entries)
    radius = float(np.max(np.abs(values)))
    if tol is None:
        tol = 1e-8 * radius if radius > 0 else 1e-8
    if tol <= 0:
        raise ValueError("tol must be positive")

    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    groups = np.split(np.arange(values.size), breaks)
    eigs = []
    projs = []
    for group in groups:
        V = vectors[:, group]
        P = V @ V.conj().T
        projs.append((P + P.conj().T) / 2)
        eigs.append(float(values[group].mean()))
    return SpectralMeasure(np.array(eigs), np.array(projs), tol=tol)


def strongly_commutes(E: SpectralMeasure, F: SpectralMeasure, tol: float = COMMUTE_TOL) -> bool:
    """True iff every projector of ``E`` commutes with every projector of ``F``."""
    if E.dim != F.dim:
        raise DimensionMismatchError(f"dimensions differ: {E.dim} vs {F.dim}")
    for P in E.projectors:
        for R in F.projectors:
            if np.max(np.abs(P @ R - R @ P)) > tol:
                return False
    return True


@dataclass(frozen=True)
class JointSpectralMeasure:
    axes: tuple[SpectralMeasure, ...]
    points: tuple[tuple[float, ...], ...]
    projectors: np.ndarray  # (n_atoms, dim, dim)

    @property
    def dim(self) -> int:
        return self.axes[0].dim

    @property
    def atoms(self) -> dict[tuple[float, ...], np.ndarray]:
        return dict(zip(self.points, self.projectors))


def joint_spectral_measure(
    measures: Sequence[SpectralMeasure], tol: float = PROJECTOR_TOL
) -> JointSpectralMeasure:
    """Product measure of pairwise strongly commuting spectral measures.

    Products with max-abs entry below ``tol`` are dropped.
    """
    measures = tuple(measures)
    if not measures:
        raise ValueError("need at least one spectral measure")
    dim = measures[0].dim
    for m in measures:
        if m.dim != dim:
            raise DimensionMismatchError("spectral measures act on different dimensions")
    for i in range(len(measures)):
        for j in range(i + 1, len(measures)):
            if not strongly_commutes(measures[i], measures[j]):
                raise CommutativityError(f"observables {i} and {j} do not commute")

    points = []
    projs = []
    # itertools.product is lexicographic in the ascending per-axis order
    for idx in product(*(range(len(m)) for m in measures)):
        P = np.eye(dim, dtype=complex)
        for m, k in zip(measures, idx):
            P = P @ m.projectors[k]
        if np.max(np.abs(P)) <= tol:
            continue
        points.append(tuple(float(m.eigenvalues[k]) for m, k in zip(measures, idx)))
        projs.append((P + P.conj().T) / 2)
    return JointSpectralMeasure(measures, tuple(points), _frozen(np.array(projs)))


def functional_calculus(
    f: Callable[..., complex], J: JointSpectralMeasure | SpectralMeasure
) -> np.ndarray:
    """``sum_a f(a) E(a)`` over the atoms of a (joint) spectral measure.

    ``f`` receives one positional argument per axis.
    """
    if isinstance(J, SpectralMeasure):
        J = joint_spectral_measure([J])
    try:
        values = np.array([complex(f(*p)) for p in J.points])
    except (ZeroDivisionError, OverflowError) as exc:
        raise NonFiniteValueError(f"function is not finite on the spectrum: {exc}") from None
    if not np.all(np.isfinite(values)):
        bad = [p for p, v in zip(J.points, values) if not np.isfinite(v)]
        raise NonFiniteValueError(f"function is not finite at atoms {bad}")
    return np.einsum("i,ijk->jk", values, J.projectors)


@dataclass(frozen=True)
class BornDistribution:
    """Joint probabilities ``Tr[E(a) rho]``.

    ``raw`` keeps the computed values; ``probabilities`` clamps round-off
    negatives in ``[-1e-12, 0)`` to zero.
    """

    points: tuple[tuple[float, ...], ...]
    raw: np.ndarray

    @property
    def probabilities(self) -> dict[tuple[float, ...], float]:
        out = {}
        for p, v in zip(self.points, self.raw):
            out[p] = 0.0 if -NEGATIVE_PROBABILITY_TOL <= v < 0 else float(v)
        return out

    def __getitem__(self, point) -> float:
        return self.probabilities[tuple(point)]

    def marginal(self, axis: int) -> dict[float, float]:
        out: dict[float, float] = {}
        for p, v in zip(self.points, self.raw):
            out[p[axis]] = out.get(p[axis], 0.0) + float(v)
        return out


def born_distribution(J: JointSpectralMeasure | SpectralMeasure, rho) -> BornDistribution:
    if isinstance(J, SpectralMeasure):
        J = joint_spectral_measure([J])
    R = _matrix(rho)
    if R.shape != (J.dim, J.dim):
        raise DimensionMismatchError(f"state has shape {R.shape}, measure has dim {J.dim}")
    raw = np.einsum("ijk,kj->i", J.projectors, R).real
    return BornDistribution(J.points, raw)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (X + X.conj().T) / 2


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    X = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    R = X @ X.conj().T
    R = (R + R.conj().T) / 2
    return R / np.trace(R).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_commuting_pair(
    dim: int, rng: np.random.Generator, levels: Iterable[float] = range(-2, 3)
) -> tuple[np.ndarray, np.ndarray]:
    """Two Hermitian matrices sharing a random eigenbasis; small integer spectra allow degeneracy."""
    U = random_unitary(dim, rng)
    levels = np.asarray(list(levels), dtype=float)
    a = rng.choice(levels, size=dim)
    b = rng.choice(levels, size=dim)
    A = U @ np.diag(a) @ U.conj().T
    B = U @ np.diag(b) @ U.conj().T
    return (A + A.conj().T) / 2, (B + B.conj().T) / 2


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

"""Hashed operators and their delta-supported quasi-joint-spectral distributions.

A hashing is a complex-weighted sum of ordered products of fractional unitary
factors ``exp(-i c s_k A_k)``. Expanding every factor through the spectral
resolution of its observable turns the hashing into a finite sum of
``exp(-i <s, point>) * weight_operator`` terms, so its inverse Fourier
transform is exactly a finite family of operator-weighted point masses.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import (
    AxisError,
    DimensionMismatchError,
    ExpansionBudgetError,
    HashingSpecError,
)
from .spectral import HermitianOperator, SpectralMeasure, _matrix, eigendecompose

DEFAULT_BUDGET = 10**7
SPEC_TOL = 1e-12
DROP_TOL = 1e-12


@dataclass(frozen=True)
class HashingTerm:
    """``coefficient * prod(exp(-i fraction * s[axis] * A[axis]))`` in factor order.

    Axes are 0-based; the leftmost factor is the leftmost exponential.
    """

    coefficient: complex
    factors: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(
            self, "factors", tuple((int(a), float(f)) for a, f in self.factors)
        )


@dataclass(frozen=True)
class HashingSpec:
    n_axes: int
    terms: tuple[HashingTerm, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        self.validate()

    def validate(self) -> None:
        if self.n_axes < 0:
            raise HashingSpecError("n_axes must be nonnegative")
        if not self.terms:
            raise HashingSpecError("hashing has no terms")
        total = sum(t.coefficient for t in self.terms)
        if abs(total - 1) > SPEC_TOL:
            raise HashingSpecError(f"coefficients sum to {total}, not 1")
        for i, term in enumerate(self.terms):
            sums = [0.0] * self.n_axes
            for axis, frac in term.factors:
                if not 0 <= axis < self.n_axes:
                    raise HashingSpecError(f"term {i}: axis {axis} out of range")
                if not math.isfinite(frac):
                    raise HashingSpecError(f"term {i}: non-finite fraction")
                sums[axis] += frac
            for axis, s in enumerate(sums):
                if not any(a == axis for a, _ in term.factors):
                    raise HashingSpecError(f"term {i}: axis {axis} has no factor")
                if abs(s - 1) > SPEC_TOL:
                    raise HashingSpecError(f"term {i}: fractions on axis {axis} sum to {s}")

    def drop_axis(self, axis: int) -> "HashingSpec":
        """Hashing with the parameter of ``axis`` set to zero (its factors removed)."""
        if not 0 <= axis < self.n_axes:
            raise AxisError(f"axis {axis} out of range for {self.n_axes} axes")
        terms = []
        for t in self.terms:
            factors = tuple((a if a < axis else a - 1, f) for a, f in t.factors if a != axis)
            terms.append(HashingTerm(t.coefficient, factors))
        return HashingSpec(self.n_axes - 1, tuple(terms))

    def involution(self) -> "HashingSpec":
        """``s -> hash(-s)^dagger``: reversed factor order, conjugated coefficients."""
        return HashingSpec(
            self.n_axes,
            tuple(HashingTerm(t.coefficient.conjugate(), t.factors[::-1]) for t in self.terms),
        )

    def expansion_size(self, spectrum_sizes: Sequence[int]) -> int:
        return sum(
            math.prod(spectrum_sizes[a] for a, _ in t.factors)
            for t in self.terms
            if t.coefficient != 0
        )

    def to_json(self) -> dict:
        return {
            "n_axes": self.n_axes,
            "terms": [
                {
                    "coeff": [t.coefficient.real, t.coefficient.imag],
                    "factors": [{"axis": a + 1, "fraction": f} for a, f in t.factors],
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "HashingSpec":
        terms = []
        for t in data["terms"]:
            re_, im_ = t["coeff"]
            factors = [(int(f["axis"]) - 1, float(f["fraction"])) for f in t["factors"]]
            terms.append(HashingTerm(complex(re_, im_), tuple(factors)))
        return cls(int(data["n_axes"]), tuple(terms))


def alpha_hashing(alpha: complex) -> HashingSpec:
    """``(1+a)/2 e^{-itB}e^{-isA} + (1-a)/2 e^{-isA}e^{-itB}`` for the pair (A, B)."""
    alpha = complex(alpha)
    return HashingSpec(
        2,
        (
            HashingTerm((1 + alpha) / 2, ((1, 1.0), (0, 1.0))),
            HashingTerm((1 - alpha) / 2, ((0, 1.0), (1, 1.0))),
        ),
    )


def kappa_hashing(kappa: float) -> HashingSpec:
    """``e^{-i(1-k)/2 sA} e^{-itB} e^{-i(1+k)/2 sA}``; complex ``kappa`` is rejected."""
    if isinstance(kappa, complex):
        if kappa.imag != 0:
            raise HashingSpecError("complex kappa is not supported")
        kappa = kappa.real
    kappa = float(kappa)
    return HashingSpec(
        2, (HashingTerm(1.0, ((0, (1 - kappa) / 2), (1, 1.0), (0, (1 + kappa) / 2))),)
    )


def parse_complex(text: str) -> complex:
    text = text.strip().replace(" ", "").replace("i", "j")
    if text in ("j", "+j"):
        return 1j
    if text == "-j":
        return -1j
    return complex(text)


def hashing_preset(name: str) -> HashingSpec:
    """Named presets: ``kd``, ``anti-kd``, ``mh``, ``alpha:<value>``, ``kappa:<value>``."""
    name = name.strip().lower()
    if name == "kd":
        return alpha_hashing(1)
    if name == "anti-kd":
        return alpha_hashing(-1)
    if name == "mh":
        return alpha_hashing(0)
    m = re.fullmatch(r"(alpha|kappa):(.+)", name)
    if m is None:
        raise HashingSpecError(f"unknown hashing preset {name!r}")
    kind, value = m.groups()
    if kind == "alpha":
        return alpha_hashing(parse_complex(value))
    return kappa_hashing(float(value))


def merge_points(
    points: np.ndarray, weights: np.ndarray, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Merge points within Euclidean distance ``tol`` (single linkage), sum their
    weights, and sort the result lexicographically by point."""
    points = np.asarray(points, dtype=float)
    m, n = points.shape
    if m == 0:
        return points, weights
    if n == 0:
        return np.zeros((1, 0)), weights.sum(axis=0, keepdims=True)
    pairs = cKDTree(points).query_pairs(r=tol, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(m, m),
    )
    n_clusters, labels = connected_components(graph, directed=False)
    counts = np.bincount(labels, minlength=n_clusters)
    merged_pts = np.zeros((n_clusters, n))
    np.add.at(merged_pts, labels, points)
    merged_pts /= counts[:, None]
    merged_w = np.zeros((n_clusters,) + weights.shape[1:], dtype=weights.dtype)
    # fixed order of accumulation: ascending source index
    np.add.at(merged_w, labels, weights)
    order = np.lexsort(merged_pts.T[::-1])
    return merged_pts[order], merged_w[order]


def _drop_negligible(points, weights, drop_tol):
    if len(points) <= 1:
        return points, weights
    keep = np.max(np.abs(weights.reshape(len(weights), -1)), axis=1) > drop_tol
    if not np.any(keep):
        keep[np.argmax(np.max(np.abs(weights.reshape(len(weights), -1)), axis=1))] = True
    return points[keep], weights[keep]


@dataclass(frozen=True)
class DiscreteQJSD:
    """Finite family of support points in R^n carrying operator weights.

    ``observables`` and ``hashing`` record provenance; both are ``None`` for
    measures obtained by transformations that leave the QJSD class.
    """

    points: np.ndarray  # (m, n)
    weights: np.ndarray  # (m, d, d)
    observables: tuple[SpectralMeasure, ...] | None = None
    hashing: HashingSpec | None = None

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        w = np.array(self.weights, dtype=complex)
        if pts.ndim != 2 or w.ndim != 3 or pts.shape[0] != w.shape[0]:
            raise ValueError("points must be (m, n) and weights (m, d, d)")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.observables is not None:
            object.__setattr__(self, "observables", tuple(self.observables))

    @property
    def n_axes(self) -> int:
        return self.points.shape[1]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def support(self) -> list[tuple[tuple[float, ...], np.ndarray]]:
        return [(tuple(p.tolist()), w) for p, w in zip(self.points, self.weights)]

    def __len__(self) -> int:
        return self.points.shape[0]

    def total(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def weight_at(self, point, tol: float = 1e-9) -> np.ndarray:
        """Weight at ``point``; zero matrix if the point is not in the support."""
        point = np.asarray(point, dtype=float)
        if len(self):
            dist = np.linalg.norm(self.points - point, axis=1)
            idx = int(np.argmin(dist))
            if dist[idx] <= tol:
                return self.weights[idx]
        return np.zeros((self.dim, self.dim), dtype=complex)

    @classmethod
    def from_spectral_measure(cls, E: SpectralMeasure) -> "DiscreteQJSD":
        return cls(E.eigenvalues[:, None], E.projectors, observables=(E,))


def qjsd_distance(P: DiscreteQJSD, Q: DiscreteQJSD, tol: float = 1e-9) -> float:
    """Max-abs difference of weights over the union of supports (missing = 0)."""
    if P.n_axes != Q.n_axes or P.dim != Q.dim:
        raise DimensionMismatchError("QJSDs have different shapes")
    pts = np.concatenate([P.points, Q.points])
    w = np.concatenate([P.weights, -Q.weights])
    _, diff = merge_points(pts, w, tol)
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def _spectral_measures(observables, tol) -> tuple[SpectralMeasure, ...]:
    out = []
    for obs in observables:
        if isinstance(obs, SpectralMeasure):
            out.append(obs)
        else:
            H = obs if isinstance(obs, HermitianOperator) else HermitianOperator(obs)
            out.append(eigendecompose(H))
    dims = {m.dim for m in out}
    if len(dims) > 1:
        raise DimensionMismatchError(f"observables have different dimensions {sorted(dims)}")
    return tuple(out)


def default_merge_tol(measures: Sequence[SpectralMeasure]) -> float:
    top = max((float(np.max(np.abs(m.eigenvalues))) for m in measures), default=0.0)
    return 1e-9 * (1 + top)


def build_qjsd(
    spec: HashingSpec,
    observables: Sequence,
    tol: float | None = None,
    budget: int = DEFAULT_BUDGET,
    drop_tol: float = DROP_TOL,
) -> DiscreteQJSD:
    """Exact inverse Fourier transform of a hashing as a delta-supported QJSD.

    Each term contributes ``coefficient * P_1 ... P_m`` (projectors in factor
    order, one eigenvalue chosen per factor) at the point whose k-th
    coordinate is the fraction-weighted sum of the eigenvalues chosen on the
    k-axis factors. Contributions closer than ``tol`` are merged; merged
    weights with max-abs entry at most ``drop_tol`` are removed.
    """
    measures = _spectral_measures(observables, tol)
    if len(measures) != spec.n_axes:
        raise DimensionMismatchError(
            f"hashing has {spec.n_axes} axes but {len(measures)} observables were given"
        )
    if spec.n_axes == 0:
        raise DimensionMismatchError("at least one observable is required")
    n = spec.n_axes
    d = measures[0].dim
    size = spec.expansion_size([len(m) for m in measures])
    if size > budget:
        raise ExpansionBudgetError(
            f"expansion needs {size} operator products (budget {budget})", size=size, budget=budget
        )
    if tol is None:
        tol = default_merge_tol(measures)

    all_pts = []
    all_w = []
    for term in spec.terms:
        if term.coefficient == 0:
            continue
        prods = np.eye(d, dtype=complex)[None]
        coords = np.zeros((1, n))
        for axis, frac in term.factors:
            E = measures[axis]
            prods = np.einsum("mij,rjk->mrik", prods, E.projectors).reshape(-1, d, d)
            shift = np.zeros((len(E), n))
            shift[:, axis] = frac * E.eigenvalues
            coords = (coords[:, None, :] + shift[None, :, :]).reshape(-1, n)
        all_pts.append(coords)
        all_w.append(term.coefficient * prods)

    points, weights = merge_points(np.concatenate(all_pts), np.concatenate(all_w), tol)
    points, weights = _drop_negligible(points, weights, drop_tol)
    return DiscreteQJSD(points, weights, observables=measures, hashing=spec)


def marginal_qjsd(
    Q: DiscreteQJSD, drop_axis: int, tol: float | None = None, drop_tol: float = DROP_TOL
) -> DiscreteQJSD:
    """Integrate out coordinate ``drop_axis`` (0-based)."""
    if not 0 <= drop_axis < Q.n_axes:
        raise AxisError(f"axis {drop_axis} out of range for {Q.n_axes} axes")
    obs = None
    if Q.observables is not None:
        obs = Q.observables[:drop_axis] + Q.observables[drop_axis + 1 :]
    if tol is None:
        tol = default_merge_tol(obs) if obs else 1e-9 * (1 + float(np.max(np.abs(Q.points), initial=0)))
    pts = np.delete(Q.points, drop_axis, axis=1)
    points, weights = merge_points(pts, Q.weights, tol)
    points, weights = _drop_negligible(points, weights, drop_tol)
    spec = Q.hashing.drop_axis(drop_axis) if Q.hashing is not None else None
    return DiscreteQJSD(points, weights, observables=obs, hashing=spec)


def conjugate_qjsd(Q: DiscreteQJSD) -> DiscreteQJSD:
    """Pointwise adjoint of the weights; the hashing maps to its involution."""
    spec = Q.hashing.involution() if Q.hashing is not None else None
    return DiscreteQJSD(
        Q.points, np.conj(np.swapaxes(Q.weights, 1, 2)), observables=Q.observables, hashing=spec
    )


def is_real_qjsd(Q: DiscreteQJSD, tol: float = 1e-10) -> bool:
    """True iff every weight operator is Hermitian within ``tol``."""
    return bool(np.all(np.abs(Q.weights - np.conj(np.swapaxes(Q.weights, 1, 2))) <= tol))


@dataclass(frozen=True)
class QJPDistribution:
    """Complex point masses ``Tr[weight * rho]``, sorted by point."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        vals = np.array(self.values, dtype=complex)
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n_axes(self) -> int:
        return self.points.shape[1]

    @property
    def support(self) -> list[tuple[tuple[float, ...], complex]]:
        return [(tuple(p.tolist()), complex(v)) for p, v in zip(self.points, self.values)]

    def value_at(self, point, tol: float = 1e-9) -> complex:
        point = np.asarray(point, dtype=float)
        if len(self.points):
            dist = np.linalg.norm(self.points - point, axis=1)
            idx = int(np.argmin(dist))
            if dist[idx] <= tol:
                return complex(self.values[idx])
        return 0j

    def total(self) -> complex:
        return complex(self.values.sum())


def _unitary_factor(values: np.ndarray, vectors: np.ndarray, phase: float) -> np.ndarray:
    return (vectors * np.exp(-1j * phase * values)) @ vectors.conj().T


def characteristic_function(spec: HashingSpec, observables: Sequence, rho, s_grid) -> np.ndarray:
    """``Tr[hash(s) rho]`` at each row of ``s_grid`` via exact matrix exponentials."""
    mats = [np.asarray(_matrix(o) if not isinstance(o, SpectralMeasure) else o.reconstruct()) for o in observables]
    if len(mats) != spec.n_axes:
        raise DimensionMismatchError("number of observables does not match hashing")
    R = _matrix(rho)
    for M in mats:
        if M.shape != R.shape:
            raise DimensionMismatchError("observable and state dimensions differ")
    eig = [np.linalg.eigh((M + M.conj().T) / 2) for M in mats]
    S = np.atleast_2d(np.asarray(s_grid, dtype=float))
    if S.shape[1] != spec.n_axes:
        raise DimensionMismatchError("s-grid rows must have one entry per axis")
    out = np.empty(len(S), dtype=complex)
    d = R.shape[0]
    for i, s in enumerate(S):
        total = np.zeros((d, d), dtype=complex)
        for term in spec.terms:
            if term.coefficient == 0:
                continue
            U = np.eye(d, dtype=complex)
            for axis, frac in term.factors:
                vals, vecs = eig[axis]
                U = U @ _unitary_factor(vals, vecs, frac * s[axis])
            total += term.coefficient * U
        out[i] = np.trace(total @ R)
    return out


def fourier_sum(Q: DiscreteQJSD, rho, s_grid) -> np.ndarray:
    """``sum_p exp(-i <s, p>) Tr[W_p rho]`` at each row of ``s_grid``."""
    vals = np.einsum("mij,ji->m", Q.weights, _matrix(rho))
    S = np.atleast_2d(np.asarray(s_grid, dtype=float))
    return np.exp(-1j * S @ Q.points.T) @ vals


def trotter_characteristic(
    observables: Sequence, rho, s_grid, N: int = 1, exact: bool = True
) -> np.ndarray:
    """``Tr[exp(-i(sA + tB)) rho]``; with ``exact=False`` the product
    ``(e^{-isA/N} e^{-itB/N})^N`` is used instead."""
    if N < 1:
        raise ValueError("N must be >= 1")
    A, B = (np.asarray(_matrix(o)) for o in observables)
    R = _matrix(rho)
    S = np.atleast_2d(np.asarray(s_grid, dtype=float))
    out = np.empty(len(S), dtype=complex)
    ea = np.linalg.eigh(A)
    eb = np.linalg.eigh(B)
    for i, (s, t) in enumerate(S):
        if exact:
            vals, vecs = np.linalg.eigh(s * A + t * B)
            U = _unitary_factor(vals, vecs, 1.0)
        else:
            step = _unitary_factor(*ea, s / N) @ _unitary_factor(*eb, t / N)
            U = np.linalg.matrix_power(step, N)
        out[i] = np.trace(U @ R)
    return out

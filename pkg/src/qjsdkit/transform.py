"""Quantisation, quasi-classicalisation and transformations of representations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatchError, GridMismatchError, KernelMassError, NonFiniteValueError
from .qjsd import DiscreteQJSD, QJPDistribution, merge_points
from .spectral import _matrix

# A classical function: callable over point coordinates, a mapping keyed by
# point tuple, or a sequence of values indexed like the support.
ClassicalFunction = Union[Callable[..., complex], Mapping, Sequence, np.ndarray]

FAITHFULNESS_RTOL = 1e-10
KERNEL_MASS_TOL = 1e-6


def tabulate(f: ClassicalFunction, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on every support point, checking finiteness."""
    points = np.asarray(points, dtype=float)
    if callable(f):
        try:
            values = np.array([complex(f(*p)) for p in points], dtype=complex)
        except (ZeroDivisionError, OverflowError) as exc:
            raise NonFiniteValueError(f"function is not finite on the support: {exc}") from None
    elif isinstance(f, Mapping):
        lookup = {tuple(np.round(np.asarray(k, dtype=float).reshape(-1), 9)): v for k, v in f.items()}
        try:
            values = np.array(
                [complex(lookup[tuple(np.round(p, 9))]) for p in points], dtype=complex
            )
        except KeyError as exc:
            raise NonFiniteValueError(f"function is undefined at support point {exc.args[0]}") from None
    else:
        values = np.asarray(f, dtype=complex).reshape(-1)
        if values.size != len(points):
            raise DimensionMismatchError(
                f"{values.size} tabulated values for {len(points)} support points"
            )
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError("function is not finite on the support")
    return values


def quantise(f: ClassicalFunction, Q: DiscreteQJSD) -> np.ndarray:
    """``sum_p f(p) W_p``."""
    return np.einsum("m,mij->ij", tabulate(f, Q.points), Q.weights)


def quasi_classicalise(Q: DiscreteQJSD, rho) -> QJPDistribution:
    """``p -> Tr[W_p rho]``."""
    R = _matrix(rho)
    if R.shape != (Q.dim, Q.dim):
        raise DimensionMismatchError(f"state has shape {R.shape}, QJSD has dim {Q.dim}")
    return QJPDistribution(Q.points, np.einsum("mij,ji->m", Q.weights, R))


def verify_adjointness(f: ClassicalFunction, Q: DiscreteQJSD, rho) -> float:
    """``|Tr[f_Q rho] - sum_p f(p) rho_Q(p)|``."""
    R = _matrix(rho)
    quantum = np.trace(quantise(f, Q) @ R)
    classical = np.sum(tabulate(f, Q.points) * quasi_classicalise(Q, R).values)
    return float(abs(quantum - classical))


def affine_transform(Q: DiscreteQJSD, T, b=None, tol: float | None = None) -> DiscreteQJSD:
    """Push every support point through ``p -> T p + b``; weights are unchanged
    and colliding points merge. The result is generally not a QJSD, so its
    provenance fields are cleared."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    n = Q.n_axes
    if T.shape != (n, n):
        raise DimensionMismatchError(f"T must be {n}x{n}")
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
    points = Q.points @ T.T + b
    if tol is None:
        tol = 1e-9 * (1 + float(np.max(np.abs(points), initial=0.0)))
    points, weights = merge_points(points, np.array(Q.weights), tol)
    return DiscreteQJSD(points, weights)


def faithfulness_rank(Q: DiscreteQJSD, rtol: float = FAITHFULNESS_RTOL) -> int:
    """Rank of the real-linear map from Hermitian operators to QJP values.

    The representation is faithful iff the rank equals ``dim**2``.
    """
    d = Q.dim
    basis = []
    for j in range(d):
        X = np.zeros((d, d), dtype=complex)
        X[j, j] = 1
        basis.append(X)
    for j in range(d):
        for k in range(j + 1, d):
            X = np.zeros((d, d), dtype=complex)
            X[j, k] = X[k, j] = 1 / np.sqrt(2)
            basis.append(X)
            Y = np.zeros((d, d), dtype=complex)
            Y[j, k] = -1j / np.sqrt(2)
            Y[k, j] = 1j / np.sqrt(2)
            basis.append(Y)
    M = np.einsum("mij,bji->mb", Q.weights, np.array(basis))
    real_map = np.vstack([M.real, M.imag])
    sv = np.linalg.svd(real_map, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


@dataclass(frozen=True)
class GridDistribution:
    """Values on a uniform grid; leading ``len(origin)`` axes are spatial.

    ``values`` holds masses per node (not densities), so the total mass is a
    plain sum. Trailing axes, if any, carry operator components.
    """

    origin: np.ndarray
    step: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(-1))
        object.__setattr__(self, "step", np.asarray(self.step, dtype=float).reshape(-1))
        object.__setattr__(self, "values", np.asarray(self.values))
        if np.any(self.step <= 0):
            raise GridMismatchError("grid steps must be positive")

    @property
    def n_axes(self) -> int:
        return self.origin.size

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[: self.n_axes]

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.step[k] * np.arange(self.shape[k])

    def mass(self):
        return self.values.sum(axis=tuple(range(self.n_axes)))

    def pair(self, rho) -> "GridDistribution":
        """Trace an operator-valued grid against ``rho``."""
        R = _matrix(rho)
        return GridDistribution(self.origin, self.step, np.einsum("...ij,ji->...", self.values, R))


def rasterize(P: QJPDistribution | DiscreteQJSD, origin, step, shape) -> GridDistribution:
    """Deposit point masses on the nearest grid node."""
    origin = np.asarray(origin, dtype=float).reshape(-1)
    step = np.asarray(step, dtype=float).reshape(-1)
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if isinstance(P, DiscreteQJSD):
        masses = np.array(P.weights)
    else:
        masses = np.array(P.values)
    if P.points.shape[1] != origin.size or len(shape) != origin.size:
        raise GridMismatchError("grid rank does not match the distribution")
    idx = np.rint((P.points - origin) / step).astype(int)
    if np.any(idx < 0) or np.any(idx >= np.array(shape)):
        raise GridMismatchError("support extends outside the raster grid")
    grid = np.zeros(shape + masses.shape[1:], dtype=complex)
    np.add.at(grid, tuple(idx.T), masses)
    return GridDistribution(origin, step, grid)


def discretize_kernel(h: Callable | np.ndarray, step, radius: float | Sequence[float]) -> np.ndarray:
    """Node masses of a kernel on a grid centred at the origin.

    ``h`` is a density with respect to the renormalized measure
    ``(2 pi)^{-n/2} dx``; node mass is ``h(x) * prod(step) / (2 pi)^{n/2}``.
    Pre-gridded arrays (odd side lengths, centre = origin) pass through.
    """
    step = np.asarray(step, dtype=float).reshape(-1)
    n = step.size
    if not callable(h):
        arr = np.asarray(h, dtype=complex)
        if arr.ndim != n or any(s % 2 == 0 for s in arr.shape):
            raise GridMismatchError("gridded kernel must have odd side lengths on every axis")
        return arr
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (n,))
    half = np.ceil(radius / step).astype(int)
    axes = [step[k] * np.arange(-half[k], half[k] + 1) for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    values = np.vectorize(lambda *x: complex(h(*x)), otypes=[complex])(*mesh)
    return values * np.prod(step) / (2 * np.pi) ** (n / 2)


def convolve_distribution(
    h: Callable | np.ndarray,
    P: QJPDistribution | DiscreteQJSD | GridDistribution,
    step=None,
    origin=None,
    shape=None,
    kernel_radius: float = 5.0,
    mass_tol: float = KERNEL_MASS_TOL,
) -> GridDistribution:
    """Convolve a (rasterized) distribution with a unit-mass kernel.

    Delta-supported inputs are first rasterized on the grid given by
    ``origin``, ``step`` and ``shape``. The output grid is enlarged by the
    kernel half-width on each side so no mass is lost at the boundary.
    """
    if not isinstance(P, GridDistribution):
        if step is None or origin is None or shape is None:
            raise GridMismatchError("raster grid (origin, step, shape) is required")
        P = rasterize(P, origin, step, shape)
    kernel = discretize_kernel(h, P.step, kernel_radius)
    mass = kernel.sum()
    if abs(mass - 1) > mass_tol:
        raise KernelMassError(f"kernel mass is {mass}, expected 1", mass=abs(mass))
    n = P.n_axes
    extra = P.values.ndim - n
    k = kernel.reshape(kernel.shape + (1,) * extra)
    values = fftconvolve(P.values, k, mode="full", axes=tuple(range(n)))
    half = np.array([(s - 1) // 2 for s in kernel.shape])
    return GridDistribution(P.origin - half * P.step, P.step, values)


def convolution_condition_residuals(kernel: np.ndarray) -> dict[int, float]:
    """For each axis, max deviation of the kernel's single-axis marginal from a
    unit impulse at the origin (a necessary condition for the convolution of a
    QJSD to keep its marginals). Takes node masses as from ``discretize_kernel``."""
    kernel = np.asarray(kernel)
    out = {}
    for k in range(kernel.ndim):
        other = tuple(a for a in range(kernel.ndim) if a != k)
        marginal = kernel.sum(axis=other)
        impulse = np.zeros_like(marginal)
        impulse[(marginal.size - 1) // 2] = 1
        out[k] = float(np.max(np.abs(marginal - impulse)))
    return out

"""Phase-space representations of the canonical pair on sampled grids.

Conventions: hbar = 1, and every phase-space function is a density with
respect to the renormalized measure ``dq dp / (2 pi)``. Under that measure the
Wigner function of a unit-norm wave function has total mass one, the vacuum
state reads ``2 exp(-(q^2 + p^2))`` and the ``q``-marginal
``sum_p W dp / (2 pi)`` is the ordinary position density ``|psi(q)|^2``.

Fourier transforms are taken as ``W^(s, t) = int exp(-i(sq + tp)) W dq dp / (2 pi)``
so that a Cohen kernel acts as the pointwise multiplier ``g^(st/2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import hermite
from scipy.signal import resample

from .errors import GridMismatchError, KernelMassError, NormalizationError
from .qjsd import parse_complex

CONVENTION = "measure=(2pi)^-1 dq dp; hbar=1"
DEFAULT_DOMAIN = (-10.0, 10.0)
DEFAULT_N = 256
HUSIMI_VARIANCE = 0.5


def _is_power_of_two(n: int) -> bool:
    return n >= 4 and n & (n - 1) == 0


@dataclass(frozen=True)
class GridAxis:
    origin: float
    step: float
    length: int

    @property
    def values(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.length)

    def to_json(self) -> dict:
        return {"origin": self.origin, "step": self.step, "length": self.length}


@dataclass(frozen=True)
class WavefunctionGrid:
    """Samples ``psi(q0 + j dq)``, ``j < N``, with ``N`` a power of two."""

    q0: float
    dq: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=complex).reshape(-1)
        if not _is_power_of_two(samples.size):
            raise GridMismatchError(f"grid length {samples.size} is not a power of two >= 4")
        if self.dq <= 0:
            raise GridMismatchError("dq must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def q(self) -> np.ndarray:
        return self.q0 + self.dq * np.arange(self.n)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dq)

    def normalized(self) -> "WavefunctionGrid":
        return WavefunctionGrid(self.q0, self.dq, self.samples / math.sqrt(self.norm_squared()))

    def momentum_amplitude(self) -> tuple[np.ndarray, np.ndarray]:
        """``psi^(p) = (2 pi)^{-1/2} sum psi(q) exp(-ipq) dq`` on the conjugate grid."""
        paxis = conjugate_axis(self.n, self.dq)
        p = paxis.values
        phase = np.exp(-1j * np.outer(p, self.q))
        return p, phase @ self.samples * self.dq / math.sqrt(2 * np.pi)

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], n: int = DEFAULT_N, domain=DEFAULT_DOMAIN
    ) -> "WavefunctionGrid":
        lo, hi = domain
        dq = (hi - lo) / n
        q = lo + dq * np.arange(n)
        return cls(lo, dq, np.asarray(func(q), dtype=complex))


def conjugate_axis(n: int, dq: float) -> GridAxis:
    """Momentum axis with ``dp dq = 2 pi / n``, centred on zero."""
    dp = 2 * np.pi / (n * dq)
    return GridAxis(-(n // 2) * dp, dp, n)


def gaussian_state(
    n: int = DEFAULT_N, domain=DEFAULT_DOMAIN, center: float = 0.0, momentum: float = 0.0, width: float = 1.0
) -> WavefunctionGrid:
    """``(pi w^2)^{-1/4} exp(-(q - c)^2 / (2 w^2) + i p0 q)``; ``w != 1`` is squeezed."""
    def psi(q):
        return (np.pi * width**2) ** -0.25 * np.exp(
            -((q - center) ** 2) / (2 * width**2) + 1j * momentum * q
        )

    return WavefunctionGrid.from_function(psi, n, domain)


def hermite_state(level: int, n: int = DEFAULT_N, domain=DEFAULT_DOMAIN) -> WavefunctionGrid:
    """Harmonic-oscillator eigenfunction of the given level."""
    coeffs = np.zeros(level + 1)
    coeffs[level] = 1
    norm = 1 / math.sqrt(2**level * math.factorial(level) * math.sqrt(np.pi))

    def psi(q):
        return norm * hermite.hermval(q, coeffs) * np.exp(-(q**2) / 2)

    return WavefunctionGrid.from_function(psi, n, domain)


def superposition(states, coefficients) -> WavefunctionGrid:
    first = states[0]
    samples = sum(c * s.samples for c, s in zip(coefficients, states))
    return WavefunctionGrid(first.q0, first.dq, samples).normalized()


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Complex samples ``values[j, k]`` at ``(q_j, p_k)`` on Fourier-conjugate axes."""

    q: GridAxis
    p: GridAxis
    values: np.ndarray
    convention: str = CONVENTION

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=complex)
        n = self.q.length
        if vals.shape != (n, self.p.length) or self.p.length != n:
            raise GridMismatchError(f"values of shape {vals.shape} do not match the axes")
        if not math.isclose(self.q.step * self.p.step, 2 * np.pi / n, rel_tol=1e-9):
            raise GridMismatchError("axes are not Fourier conjugate (dq dp != 2 pi / N)")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.q.length

    @property
    def cell(self) -> float:
        return self.q.step * self.p.step / (2 * np.pi)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q.values, self.p.values, indexing="ij")

    def mass(self) -> complex:
        return complex(self.values.sum() * self.cell)

    def q_marginal(self) -> np.ndarray:
        """Position density (Lebesgue) obtained by integrating out ``p``."""
        return self.values.sum(axis=1) * self.p.step / (2 * np.pi)

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.q.step / (2 * np.pi)

    def integrate(self, f) -> complex:
        """``int f W dq dp / (2 pi)`` for ``f`` callable on the mesh or tabulated."""
        F = f(*self.mesh()) if callable(f) else np.asarray(f)
        return complex(np.sum(F * self.values) * self.cell)

    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular frequencies ``(s, t)`` conjugate to ``(q, p)`` in FFT order."""
        s = 2 * np.pi * np.fft.fftfreq(self.n, self.q.step)
        t = 2 * np.pi * np.fft.fftfreq(self.n, self.p.step)
        return s, t

    def with_values(self, values) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.q, self.p, values, self.convention)


def wigner(psi: WavefunctionGrid, norm_tol: float = 1e-8) -> PhaseSpaceGrid:
    """Wigner function ``int psi*(q + t/2) psi(q - t/2) exp(ipt) dt``.

    Half-step samples come from band-limited interpolation; samples beyond the
    domain are zero. The lag ``t`` runs over ``(m - N/2) dq``.
    """
    nrm = psi.norm_squared()
    if abs(nrm - 1) > norm_tol:
        raise NormalizationError(f"wave function has squared norm {nrm!r}", norm=nrm)
    n = psi.n
    half = resample(psi.samples, 2 * n)  # half[2j + r] = psi(q0 + (j + r/2) dq)
    j = np.arange(n)[:, None]
    offset = np.arange(n)[None, :] - n // 2
    plus = 2 * j + offset
    minus = 2 * j - offset
    valid = (plus >= 0) & (plus <= 2 * n - 2) & (minus >= 0) & (minus <= 2 * n - 2)
    K = np.where(
        valid,
        np.conj(half[np.clip(plus, 0, 2 * n - 1)]) * half[np.clip(minus, 0, 2 * n - 1)],
        0,
    )
    # the lag -N/2 dq has no mirror on the grid; pair it with its periodic image
    K[:, 0] = K[:, 0].real
    # exp(i p_k t_m) = exp(2 pi i k m / N) (-1)^(k + m) when N is a multiple of 4
    sign = (-1.0) ** np.arange(n)
    W = n * np.fft.ifft(K * sign[None, :], axis=1) * sign[None, :] * psi.dq
    imag = float(np.max(np.abs(W.imag)))
    if imag > 1e-9 * max(1.0, float(np.max(np.abs(W.real)))):
        warnings.warn(f"Wigner function has imaginary residue {imag:.2e}", RuntimeWarning)
    return PhaseSpaceGrid(GridAxis(psi.q0, psi.dq, n), conjugate_axis(n, psi.dq), W.real)


def gaussian_wigner(q: GridAxis, p: GridAxis, var_q: float, var_p: float, center=(0.0, 0.0)) -> PhaseSpaceGrid:
    """Closed-form Gaussian with the given per-axis variances, unit mass."""
    Qm, Pm = np.meshgrid(q.values - center[0], p.values - center[1], indexing="ij")
    values = np.exp(-(Qm**2) / (2 * var_q) - Pm**2 / (2 * var_p)) / math.sqrt(var_q * var_p)
    return PhaseSpaceGrid(q, p, values)


@dataclass(frozen=True)
class CohenKernel:
    """Multiplier ``g^(omega)`` applied as ``g^(st/2)``; must satisfy ``g^(0) = 1``."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self) -> None:
        at_zero = complex(np.asarray(self.func(np.zeros(1)))[0])
        if abs(at_zero - 1) > 1e-12:
            raise KernelMassError(f"kernel {self.name!r} has g^(0) = {at_zero}", mass=abs(at_zero))

    def __call__(self, omega):
        return np.asarray(self.func(np.asarray(omega, dtype=float)), dtype=complex)

    @classmethod
    def tabulated(cls, omega, values, name: str = "tabulated") -> "CohenKernel":
        omega = np.asarray(omega, dtype=float)
        values = np.asarray(values, dtype=complex)
        order = np.argsort(omega)
        omega, values = omega[order], values[order]

        def func(w):
            return np.interp(w, omega, values.real, left=0, right=0) + 1j * np.interp(
                w, omega, values.imag, left=0, right=0
            )

        return cls(name, func)


def cohen_kernel(name: str) -> CohenKernel:
    """``wigner``, ``kd``, ``anti-kd``, ``mh``, ``born-jordan`` or ``kappa:<value>``.

    ``kappa:k`` multiplies the characteristic function by ``exp(i k omega)``,
    which turns ``exp(-i(sQ + tP))`` into the ordered product
    ``exp(-i(1-k)/2 sQ) exp(-itP) exp(-i(1+k)/2 sQ)``: the same ordering as
    the discrete kappa hashing. ``kd`` is ``kappa:1`` (weight ``E_P E_Q``,
    matching the discrete ``kd`` preset on the pair (Q, P)) and ``anti-kd``
    is ``kappa:-1``.
    """
    key = name.strip().lower()
    if key in ("wigner", "identity", "weyl"):
        return CohenKernel(key, lambda w: np.ones_like(w, dtype=complex))
    if key == "kd":
        return CohenKernel(key, lambda w: np.exp(1j * w))
    if key == "anti-kd":
        return CohenKernel(key, lambda w: np.exp(-1j * w))
    if key == "mh":
        return CohenKernel(key, lambda w: np.cos(w).astype(complex))
    if key == "born-jordan":
        return CohenKernel(key, lambda w: np.sinc(w / np.pi).astype(complex))
    if key.startswith("kappa:"):
        kappa = parse_complex(key.split(":", 1)[1])
        if kappa.imag != 0:
            raise KernelMassError("complex kappa is not supported")
        return CohenKernel(key, lambda w, k=kappa.real: np.exp(1j * k * w))
    raise KernelMassError(f"unknown Cohen kernel {name!r}")


def cohen_transform(W: PhaseSpaceGrid, kernel: CohenKernel | str) -> PhaseSpaceGrid:
    """Multiply the characteristic function by ``g^(st/2)`` and transform back."""
    if isinstance(kernel, str):
        kernel = cohen_kernel(kernel)
    s, t = W.frequencies()
    mult = kernel(np.outer(s, t) / 2)
    return W.with_values(np.fft.ifft2(np.fft.fft2(W.values) * mult))


def gaussian_transfer(W: PhaseSpaceGrid, variance: float) -> np.ndarray:
    """Fourier multiplier of the unit-mass Gaussian with per-axis ``variance``."""
    s, t = W.frequencies()
    return np.exp(-variance * (s[:, None] ** 2 + t[None, :] ** 2) / 2)


def husimi(W: PhaseSpaceGrid, variance: float = HUSIMI_VARIANCE) -> PhaseSpaceGrid:
    """Gaussian smoothing of a Wigner grid.

    The default variance 1/2 per axis (the vacuum Wigner function as kernel)
    gives the Q-function ``<z|rho|z>``; larger variances give coarser but
    still nonnegative smoothings.
    """
    if variance <= 0:
        raise ValueError("variance must be positive")
    G = gaussian_transfer(W, variance)
    return W.with_values(np.fft.ifft2(np.fft.fft2(W.values) * G))


def glauber_sudarshan(W: PhaseSpaceGrid, eps: float, variance: float = HUSIMI_VARIANCE) -> PhaseSpaceGrid:
    """Tikhonov-regularized Gaussian deconvolution ``G / (G^2 + eps)``.

    Exact deconvolution is unbounded; this is an approximation whose
    round-trip error through :func:`husimi` is ``eps / (G^2 + eps)`` times the
    characteristic function of ``W``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if variance <= 0:
        raise ValueError("variance must be positive")
    G = gaussian_transfer(W, variance)
    return W.with_values(np.fft.ifft2(np.fft.fft2(W.values) * G / (G**2 + eps)))


def weyl_quantise_grid(f, basis_dim: int | None = None, grid: PhaseSpaceGrid | None = None) -> np.ndarray:
    """Position-basis matrix of the Weyl quantisation of a tabulated symbol.

    ``<x_j|f_W|x_k> = dq * int f((x_j + x_k)/2, p) exp(ip(x_j - x_k)) dp / (2 pi)``,
    with the symbol interpolated to half-steps in ``q`` by band-limited
    resampling. ``f`` is a :class:`PhaseSpaceGrid`, an ``(N, N)`` array or a
    callable ``f(q, p)``; the last two need ``grid`` for the axes. The result is
    the central ``basis_dim`` block of the ``N x N`` matrix.
    """
    if isinstance(f, PhaseSpaceGrid):
        grid, F = f, np.asarray(f.values)
    else:
        if grid is None:
            raise GridMismatchError("a grid is required for untabulated symbols")
        F = f(*grid.mesh()) if callable(f) else np.asarray(f)
    n = grid.n
    if F.shape != (n, n):
        raise GridMismatchError(f"symbol of shape {F.shape} does not match the {n}x{n} grid")
    basis_dim = n if basis_dim is None else int(basis_dim)
    if not 1 <= basis_dim <= n:
        raise GridMismatchError(f"basis_dim must be in [1, {n}]")

    fh = resample(F, 2 * n, axis=0)  # fh[j + k] = f((q_j + q_k)/2, .)
    lags = np.arange(-(n - 1), n)
    phase = np.exp(1j * np.outer(grid.p.values, lags * grid.q.step))
    G = fh @ phase / n  # dq dp / (2 pi) = 1/n
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    M = G[j + k, j - k + n - 1]
    start = (n - basis_dim) // 2
    return M[start : start + basis_dim, start : start + basis_dim]


def position_ket(psi: WavefunctionGrid) -> np.ndarray:
    """Orthonormal-basis coefficients ``psi_j sqrt(dq)``."""
    return psi.samples * math.sqrt(psi.dq)

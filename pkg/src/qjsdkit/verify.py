"""Seeded invariant battery behind ``qjsd verify``.

Each property draws its random instances from one generator seeded by the
caller and reports the largest residual it saw against a fixed tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import phase_space as ps
from .qjsd import (
    DiscreteQJSD,
    alpha_hashing,
    build_qjsd,
    characteristic_function,
    conjugate_qjsd,
    fourier_sum,
    is_real_qjsd,
    kappa_hashing,
    marginal_qjsd,
    qjsd_distance,
)
from .spectral import (
    PAULI_X,
    PAULI_Z,
    born_distribution,
    eigendecompose,
    functional_calculus,
    joint_spectral_measure,
    random_commuting_pair,
    random_density,
    random_hermitian,
)
from .stats import (
    antisymmetric_covariance,
    conditional_expectation,
    quantum_covariance,
    symmetric_covariance,
    verify_correlation_preservation,
    weak_value,
)
from .transform import affine_transform, faithfulness_rank, quantise, quasi_classicalise, verify_adjointness

SHIPPED_ALPHAS = (-1, 0, 1, 1j, 0.3 + 0.7j)
SHIPPED_KAPPAS = (-1.0, 0.0, 0.5, 1.0)


def shipped_hashings():
    return [alpha_hashing(a) for a in SHIPPED_ALPHAS] + [kappa_hashing(k) for k in SHIPPED_KAPPAS]


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}.{self.name} max_residual={self.residual:.3e} tol={self.tol:.1e}"


def _random_alpha(rng) -> complex:
    return complex(rng.normal(), rng.normal())


def _random_pair(rng, dmax: int = 6):
    d = int(rng.integers(2, dmax + 1))
    return d, random_hermitian(d, rng), random_hermitian(d, rng)


def _poly(rng):
    c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return lambda a, b: sum(c[i, j] * a**i * b**j for i in range(3) for j in range(3))


# spectral

def _reconstruction(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 9))
        H = random_hermitian(d, rng)
        E = eigendecompose(H)
        worst = max(worst, float(np.max(np.abs(E.reconstruct() - H))), *E.invariant_residuals().values())
    return worst


def _polynomial_calculus(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 7))
        H = random_hermitian(d, rng)
        c = rng.normal(size=4)
        expected = sum(c[k] * np.linalg.matrix_power(H, k) for k in range(4))
        J = joint_spectral_measure([eigendecompose(H)])
        got = functional_calculus(lambda x: sum(c[k] * x**k for k in range(4)), J)
        worst = max(worst, float(np.max(np.abs(got - expected))))
    return worst


def _born_marginals(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 8))
        A, B = random_commuting_pair(d, rng)
        rho = random_density(d, rng)
        EA, EB = eigendecompose(A), eigendecompose(B)
        joint = born_distribution(joint_spectral_measure([EA, EB]), rho)
        for axis, E in ((0, EA), (1, EB)):
            single = born_distribution(E, rho)
            marg = joint.marginal(axis)
            for (a,), p in zip(single.points, single.raw):
                worst = max(worst, abs(marg.get(a, 0.0) - p))
    return worst


# qjsd

def _normalisation(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng)
        for spec in shipped_hashings():
            Q = build_qjsd(spec, [A, B])
            worst = max(worst, float(np.max(np.abs(Q.total() - np.eye(d)))))
    return worst


def _marginal_consistency(rng, trials):
    worst = 0.0
    for _ in range(trials):
        _, A, B = _random_pair(rng)
        EA, EB = eigendecompose(A), eigendecompose(B)
        for spec in shipped_hashings():
            Q = build_qjsd(spec, [EA, EB])
            for axis, E in ((1, EA), (0, EB)):
                worst = max(worst, qjsd_distance(marginal_qjsd(Q, axis), DiscreteQJSD.from_spectral_measure(E)))
                reduced = build_qjsd(spec.drop_axis(axis), [E])
                worst = max(worst, qjsd_distance(marginal_qjsd(Q, axis), reduced))
    return worst


def _commuting_collapse(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        A, B = random_commuting_pair(d, rng)
        rho = random_density(d, rng)
        EA, EB = eigendecompose(A), eigendecompose(B)
        born = born_distribution(joint_spectral_measure([EA, EB]), rho)
        for spec in shipped_hashings():
            P = quasi_classicalise(build_qjsd(spec, [EA, EB]), rho)
            for point, p in zip(born.points, born.raw):
                worst = max(worst, abs(P.value_at(point) - p))
            worst = max(worst, float(np.sum(np.abs(P.values))) - float(np.sum(np.abs(born.raw))))
    return worst


def _fourier_consistency(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng, 4)
        rho = random_density(d, rng)
        S = rng.uniform(-3, 3, size=(8, 2))
        for spec in shipped_hashings():
            Q = build_qjsd(spec, [A, B])
            diff = characteristic_function(spec, [A, B], rho, S) - fourier_sum(Q, rho, S)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def _involution(rng, trials):
    worst = 0.0
    for _ in range(trials):
        _, A, B = _random_pair(rng)
        Q = build_qjsd(alpha_hashing(_random_alpha(rng)), [A, B])
        worst = max(worst, float(np.max(np.abs(conjugate_qjsd(conjugate_qjsd(Q)).weights - Q.weights))))
    return worst


def _realness(rng, trials):
    """MH and the symmetric kappa member are real; KD of a generic pair is not."""
    failures = 0
    for _ in range(trials):
        _, A, B = _random_pair(rng)
        for spec, expected in ((alpha_hashing(0), True), (kappa_hashing(0), True), (alpha_hashing(1), False)):
            Q = build_qjsd(spec, [A, B])
            real = is_real_qjsd(Q)
            agrees = qjsd_distance(conjugate_qjsd(Q), Q) <= 1e-10
            failures += int(real != expected or real != agrees)
    return float(failures)


# transform

def _adjointness(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng)
        rho = random_density(d, rng)
        Q = build_qjsd(alpha_hashing(_random_alpha(rng)), [A, B])
        worst = max(worst, verify_adjointness(_poly(rng), Q, rho))
    return worst


def _affine_functoriality(rng, trials):
    worst = 0.0
    for _ in range(trials):
        _, A, B = _random_pair(rng, 4)
        Q = build_qjsd(alpha_hashing(1), [A, B])
        T1, T2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        b1, b2 = rng.normal(size=2), rng.normal(size=2)
        two_step = affine_transform(affine_transform(Q, T1, b1), T2, b2)
        one_step = affine_transform(Q, T2 @ T1, T2 @ b1 + b2)
        worst = max(worst, qjsd_distance(two_step, one_step, tol=1e-8))
        f = _poly(rng)
        lhs = quantise(f, affine_transform(Q, T1, b1))
        rhs = quantise(lambda a, b: f(*(T1 @ np.array([a, b]) + b1)), Q)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / (1 + float(np.max(np.abs(rhs)))))
    return worst


def _faithfulness_invariance(rng, trials):
    diffs = 0
    for _ in range(trials):
        _, A, B = _random_pair(rng, 4)
        Q = build_qjsd(alpha_hashing(_random_alpha(rng)), [A, B])
        T = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        diffs += abs(faithfulness_rank(Q) - faithfulness_rank(affine_transform(Q, T, rng.normal(size=2))))
    return float(diffs)


# phase space

def _wigner_golden(rng, trials):
    W = ps.wigner(ps.gaussian_state())
    q, p = W.mesh()
    mask = (np.abs(q) <= 6) & (np.abs(p) <= 6)
    err = np.max(np.abs(W.values - 2 * np.exp(-(q**2) - p**2))[mask])
    return float(err)


def _wigner_marginals(rng, trials):
    worst = 0.0
    for level in range(trials):
        psi = ps.hermite_state(level % 4)
        W = ps.wigner(psi)
        _, amp = psi.momentum_amplitude()
        worst = max(
            worst,
            float(np.max(np.abs(W.q_marginal() - np.abs(psi.samples) ** 2))),
            float(np.max(np.abs(W.p_marginal() - np.abs(amp) ** 2))),
        )
    return worst


def _cohen_marginals(rng, trials):
    psi = ps.superposition([ps.hermite_state(k) for k in range(3)], rng.normal(size=3) + 1j * rng.normal(size=3))
    W = ps.wigner(psi)
    worst = 0.0
    for name in ("wigner", "kd", "anti-kd", "mh", "born-jordan", "kappa:0.5"):
        C = ps.cohen_transform(W, name)
        worst = max(
            worst,
            abs(C.mass() - W.mass()),
            float(np.max(np.abs(C.q_marginal() - W.q_marginal()))),
            float(np.max(np.abs(C.p_marginal() - W.p_marginal()))),
        )
    return worst


def _husimi_positivity(rng, trials):
    worst = 0.0
    for k in range(trials):
        coeffs = rng.normal(size=5) + 1j * rng.normal(size=5)
        psi = ps.superposition([ps.hermite_state(j) for j in range(5)], coeffs) if k else ps.hermite_state(1)
        H = ps.husimi(ps.wigner(psi))
        worst = max(worst, float(-np.min(H.values.real)), float(np.max(np.abs(H.values.imag))))
    return max(worst, 0.0)


def _weyl_pairing(rng, trials):
    psi = ps.hermite_state(1)
    W = ps.wigner(psi)
    v = ps.position_ket(psi)
    worst = 0.0
    for _ in range(trials):
        c = rng.normal(size=3)

        def f(q, p, c=c):
            return c[0] * q**2 + c[1] * q * p + c[2] * np.cos(p)

        M = ps.weyl_quantise_grid(f, grid=W)
        worst = max(worst, abs(np.vdot(v, M @ v) - W.integrate(f)))
    return worst


# stats

def _covariance_decomposition(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng)
        rho = random_density(d, rng)
        alpha = _random_alpha(rng)
        cv = quantum_covariance(lambda a: a, lambda b: b, build_qjsd(alpha_hashing(alpha), [A, B]), rho)
        expected = symmetric_covariance(A, B, rho) + 1j * alpha * antisymmetric_covariance(A, B, rho)
        worst = max(worst, abs(cv - expected))
    return worst


def _conditional_closed_form(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng)
        rho = random_density(d, rng)
        alpha = _random_alpha(rng)
        Q = build_qjsd(alpha_hashing(alpha), [A, B])
        c = rng.normal(size=4)

        def f(a, c=c):
            return c[0] + c[1] * a + c[2] * a**2 + c[3] * a**3

        ce = conditional_expectation(f, Q, rho)
        FA = functional_calculus(f, joint_spectral_measure([eigendecompose(A)]))
        for b, P in eigendecompose(B).atoms:
            T = np.trace(P @ FA @ rho) / np.trace(P @ rho)
            worst = max(worst, abs(ce[b] - (T.real + 1j * alpha * T.imag)))
        tower = sum(v * ce.probabilities[b] for b, v in ce.values.items())
        worst = max(worst, abs(tower - np.trace(FA @ rho)))
        worst = max(worst, verify_correlation_preservation(f, lambda b: np.exp(1j * b), Q, rho))
    return worst


def _weak_value(rng, trials):
    worst = 0.0
    for _ in range(trials):
        d, A, B = _random_pair(rng, 3)
        rho = random_density(d, rng)
        ce = conditional_expectation(lambda a: a, build_qjsd(alpha_hashing(1), [A, B]), rho)
        for b in ce.values:
            worst = max(worst, abs(ce[b] - weak_value(A, B, b, rho)))
    psi = np.array([1, 0.1]) / np.hypot(1, 0.1)
    worst = max(worst, abs(weak_value(PAULI_X, PAULI_Z, -1, np.outer(psi, psi)) - 10))
    return worst


Property = tuple[str, str, Callable, int, float]

PROPERTIES: list[Property] = [
    ("spectral", "reconstruction", _reconstruction, 30, 1e-10),
    ("spectral", "polynomial_calculus", _polynomial_calculus, 30, 1e-9),
    ("spectral", "born_marginals", _born_marginals, 30, 1e-12),
    ("qjsd", "normalisation", _normalisation, 20, 1e-9),
    ("qjsd", "marginal_consistency", _marginal_consistency, 10, 1e-9),
    ("qjsd", "commuting_collapse", _commuting_collapse, 20, 1e-9),
    ("qjsd", "fourier_consistency", _fourier_consistency, 10, 1e-9),
    ("qjsd", "involution", _involution, 20, 0.0),
    ("qjsd", "realness_criterion", _realness, 10, 0.0),
    ("transform", "adjointness", _adjointness, 100, 1e-9),
    ("transform", "affine_functoriality", _affine_functoriality, 20, 1e-9),
    ("transform", "faithfulness_invariance", _faithfulness_invariance, 10, 0.0),
    ("phase_space", "wigner_golden", _wigner_golden, 1, 1e-6),
    ("phase_space", "wigner_marginals", _wigner_marginals, 4, 1e-6),
    ("phase_space", "cohen_marginals", _cohen_marginals, 1, 1e-6),
    ("phase_space", "husimi_positivity", _husimi_positivity, 4, 1e-9),
    ("phase_space", "weyl_pairing", _weyl_pairing, 5, 2e-4),
    ("stats", "covariance_decomposition", _covariance_decomposition, 50, 1e-9),
    ("stats", "conditional_closed_form", _conditional_closed_form, 50, 1e-9),
    ("stats", "weak_value", _weak_value, 20, 1e-9),
]

SUITES = sorted({p[0] for p in PROPERTIES})


def run_suite(suite: str = "all", seed: int = 0) -> list[PropertyResult]:
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    rng = np.random.default_rng(seed)
    results = []
    for group, name, prop, trials, tol in PROPERTIES:
        if suite not in ("all", group):
            continue
        residual = float(prop(rng, trials))
        results.append(PropertyResult(group, name, residual, tol))
    return results

"""Quantum correlations, covariances, conditional expectations and weak values.

Everything here works on a two-axis QJSD of an ordered pair (A, B): axis 0
carries the outcomes of A, axis 1 those of B. Functions ``f`` (of ``a``) and
``g`` (of ``b``) are callables or mappings from outcome to value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .errors import (
    DegenerateConditioningError,
    DegeneratePostSelectionError,
    DimensionMismatchError,
    NonFiniteValueError,
)
from .qjsd import DiscreteQJSD, marginal_qjsd
from .spectral import _matrix, eigendecompose
from .transform import quasi_classicalise, tabulate

OutcomeFunction = Union[Callable[[float], complex], Mapping[float, complex]]

CONDITIONING_THRESHOLD = 1e-12


def _evaluate(f: OutcomeFunction, xs: np.ndarray) -> np.ndarray:
    if callable(f):
        try:
            values = np.array([complex(f(float(x))) for x in xs])
        except (ZeroDivisionError, OverflowError) as exc:
            raise NonFiniteValueError(f"function is not finite on the marginal support: {exc}") from None
    else:
        table = {round(float(k), 9): complex(v) for k, v in f.items()}
        try:
            values = np.array([table[round(float(x), 9)] for x in xs])
        except KeyError as exc:
            raise NonFiniteValueError(f"function undefined at outcome {exc.args[0]}") from None
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError("function is not finite on the marginal support")
    return values


def _check_pair(Q: DiscreteQJSD) -> None:
    if Q.n_axes != 2:
        raise DimensionMismatchError(f"expected a QJSD of a pair, got {Q.n_axes} axes")


def sesquilinear_form(f, g, Q: DiscreteQJSD, rho) -> complex:
    """``<f, g> = sum_p g*(p) f(p) rho_Q(p)`` for functions of the full support point.

    Hermitian symmetric for every ``f, g`` iff the QJP distribution is real.
    """
    qjp = quasi_classicalise(Q, rho)
    return complex(np.sum(np.conj(tabulate(g, Q.points)) * tabulate(f, Q.points) * qjp.values))


def quasi_correlation(f: OutcomeFunction, g: OutcomeFunction, Q: DiscreteQJSD, rho) -> complex:
    """``<g(B), f(A)> = sum g*(b) f(a) rho_Q(a, b)``."""
    _check_pair(Q)
    qjp = quasi_classicalise(Q, rho)
    fa = _evaluate(f, Q.points[:, 0])
    gb = _evaluate(g, Q.points[:, 1])
    return complex(np.sum(np.conj(gb) * fa * qjp.values))


def _marginal_operator(Q: DiscreteQJSD, keep: int, func: OutcomeFunction) -> np.ndarray:
    M = marginal_qjsd(Q, 1 - keep)
    return np.einsum("m,mij->ij", _evaluate(func, M.points[:, 0]), M.weights)


def quantum_covariance(f: OutcomeFunction, g: OutcomeFunction, Q: DiscreteQJSD, rho) -> complex:
    """``<g(B) - E[g(B)], f(A) - E[f(A)]>`` under the QJP distribution of ``Q``.

    Means are ordinary expectations ``Tr[f(A) rho]``; the result equals the
    quasi-correlation minus ``conj(E[g(B)]) * E[f(A)]``.
    """
    _check_pair(Q)
    R = _matrix(rho)
    mean_f = np.trace(_marginal_operator(Q, 0, f) @ R)
    mean_g = np.trace(_marginal_operator(Q, 1, g) @ R)
    qjp = quasi_classicalise(Q, R)
    fa = _evaluate(f, Q.points[:, 0]) - mean_f
    gb = _evaluate(g, Q.points[:, 1]) - mean_g
    return complex(np.sum(np.conj(gb) * fa * qjp.values))


def symmetric_covariance(A, B, rho) -> float:
    """``Tr[{A, B}/2 rho] - Tr[A rho] Tr[B rho]``."""
    A, B, R = (np.asarray(_matrix(x)) for x in (A, B, rho))
    value = np.trace((A @ B + B @ A) @ R) / 2 - np.trace(A @ R) * np.trace(B @ R)
    return float(value.real)


def antisymmetric_covariance(A, B, rho) -> float:
    """``Tr[(BA - AB)/(2i) rho]``.

    The commutator is ordered so that the alpha-family covariance of
    ``(A, B)`` reads ``CV_S + i alpha CV_A``: the ``(1 + alpha)/2`` branch of
    that family places ``E_B(b) E_A(a)`` on its support.
    """
    A, B, R = (np.asarray(_matrix(x)) for x in (A, B, rho))
    return float((np.trace((B @ A - A @ B) @ R) / 2j).real)


@dataclass(frozen=True)
class ConditionalExpectation:
    """Atom values ``E[f(A) | B = b]`` plus the normal operator ``sum value(b) E_B(b)``.

    Atoms whose probability does not exceed the threshold are listed in
    ``excluded`` with their raw probability instead of being divided by.
    """

    values: dict[float, complex]
    probabilities: dict[float, float]
    operator_form: np.ndarray
    excluded: dict[float, float] = field(default_factory=dict)

    def __getitem__(self, b: float) -> complex:
        for key, value in self.values.items():
            if abs(key - b) <= 1e-9 * (1 + abs(b)):
                return value
        raise KeyError(b)


def conditional_expectation(
    f: OutcomeFunction, Q: DiscreteQJSD, rho, threshold: float = CONDITIONING_THRESHOLD
) -> ConditionalExpectation:
    _check_pair(Q)
    R = _matrix(rho)
    qjp = quasi_classicalise(Q, R)
    fa = _evaluate(f, Q.points[:, 0])
    EB = marginal_qjsd(Q, 0)
    values: dict[float, complex] = {}
    probs: dict[float, float] = {}
    excluded: dict[float, float] = {}
    operator = np.zeros((Q.dim, Q.dim), dtype=complex)
    tol = 1e-9 * (1 + float(np.max(np.abs(EB.points), initial=0.0)))
    for b, proj in zip(EB.points[:, 0], EB.weights):
        p = float(np.trace(proj @ R).real)
        if p <= threshold:
            excluded[float(b)] = p
            continue
        mask = np.abs(Q.points[:, 1] - b) <= tol
        value = complex(np.sum(fa[mask] * qjp.values[mask]) / p)
        values[float(b)] = value
        probs[float(b)] = p
        operator += value * proj
    if not values:
        raise DegenerateConditioningError(
            "every conditioning atom has probability at or below the threshold",
            excluded={str(k): v for k, v in excluded.items()},
        )
    return ConditionalExpectation(values, probs, operator, excluded)


def verify_correlation_preservation(
    f: OutcomeFunction,
    g: OutcomeFunction,
    Q: DiscreteQJSD,
    rho,
    threshold: float = CONDITIONING_THRESHOLD,
) -> float:
    """``|<g(B), E[f(A)|B]>_{rho_B} - <g(B), f(A)>_{rho_Q}|``."""
    ce = conditional_expectation(f, Q, rho, threshold)
    bs = np.array(list(ce.values))
    gb = _evaluate(g, bs)
    lhs = sum(
        np.conj(gv) * ce.values[b] * ce.probabilities[b] for gv, b in zip(gb, ce.values)
    )
    rhs = quasi_correlation(f, g, Q, rho)
    return float(abs(lhs - rhs))


def weak_value(A, B, b: float, rho, threshold: float = CONDITIONING_THRESHOLD) -> complex:
    """``Tr[E_B(b) A rho] / Tr[E_B(b) rho]`` with ``E_B(b)`` the full eigenprojector."""
    A_, R = np.asarray(_matrix(A)), _matrix(rho)
    EB = eigendecompose(B)
    try:
        P = EB.projector(b, tol=1e-9 * (1 + abs(b)))
    except KeyError:
        raise DegeneratePostSelectionError(
            f"{b} is not an eigenvalue of B", probability=0.0
        ) from None
    prob = float(np.trace(P @ R).real)
    if prob <= threshold:
        raise DegeneratePostSelectionError(
            f"post-selection probability {prob:.3e} is at or below the threshold", probability=prob
        )
    return complex(np.trace(P @ A_ @ R) / prob)


def two_state_value(
    A, B, b: float, rho, alpha: complex, threshold: float = CONDITIONING_THRESHOLD
) -> complex:
    """``(1 + alpha)/2 A_w + (1 - alpha)/2 conj(A_w)``."""
    aw = weak_value(A, B, b, rho, threshold)
    return (1 + alpha) / 2 * aw + (1 - alpha) / 2 * np.conj(aw)

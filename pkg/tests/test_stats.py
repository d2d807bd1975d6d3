import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ket_density, seeds
from qjsdkit.errors import DegenerateConditioningError, DegeneratePostSelectionError
from qjsdkit.qjsd import alpha_hashing, build_qjsd
from qjsdkit.spectral import (
    PAULI_X,
    PAULI_Z,
    born_distribution,
    eigendecompose,
    joint_spectral_measure,
    random_commuting_pair,
    random_density,
    random_hermitian,
)
from qjsdkit.stats import (
    antisymmetric_covariance,
    conditional_expectation,
    quantum_covariance,
    quasi_correlation,
    sesquilinear_form,
    symmetric_covariance,
    two_state_value,
    verify_correlation_preservation,
    weak_value,
)
from qjsdkit.transform import quasi_classicalise

alphas = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def identity(x):
    return x


def direct_traces(A, B, rho):
    anti = np.trace((A @ B + B @ A) @ rho) / 2
    comm = np.trace((A @ B - B @ A) @ rho) / 2j
    return anti, comm


def test_normalisation():
    rng = np.random.default_rng(0)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    Q = build_qjsd(alpha_hashing(0.2 + 0.5j), [A, B])
    assert quasi_correlation(lambda a: 1, lambda b: 1, Q, random_density(3, rng)) == pytest.approx(1)


def test_commuting_pair_gives_classical_correlation():
    rng = np.random.default_rng(1)
    A, B = random_commuting_pair(4, rng)
    rho = random_density(4, rng)
    J = joint_spectral_measure([eigendecompose(A), eigendecompose(B)])
    born = born_distribution(J, rho)
    classical = sum(np.exp(-1j * b) * a**2 * p for (a, b), p in zip(born.points, born.raw))
    got = quasi_correlation(lambda a: a**2, lambda b: np.exp(1j * b), build_qjsd(alpha_hashing(1j), [A, B]), rho)
    assert got == pytest.approx(classical, abs=1e-12)


@pytest.mark.parametrize("alpha", [0, 1, -1, 1j, 0.3 + 0.7j])
def test_pauli_correlation_uses_b_then_a_commutator(alpha):
    rho = random_density(2, np.random.default_rng(2))
    anti, comm = direct_traces(PAULI_X, PAULI_Z, rho)
    got = quasi_correlation(identity, identity, build_qjsd(alpha_hashing(alpha), [PAULI_X, PAULI_Z]), rho)
    # (1 + alpha)/2 branch carries E_B E_A, so the imaginary part follows [B, A]
    assert got == pytest.approx(anti - 1j * alpha * comm, abs=1e-14)


@given(seeds, st.integers(2, 6), alphas)
def test_covariance_decomposition(seed, d, alpha):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(d, rng), random_hermitian(d, rng)
    rho = random_density(d, rng)
    anti, comm = direct_traces(A, B, rho)
    mean_a, mean_b = np.trace(A @ rho), np.trace(B @ rho)
    cvs = symmetric_covariance(A, B, rho)
    cva = antisymmetric_covariance(A, B, rho)
    assert cvs == pytest.approx((anti - mean_a * mean_b).real, abs=1e-12)
    assert cva == pytest.approx(-comm.real, abs=1e-12)
    cv = quantum_covariance(identity, identity, build_qjsd(alpha_hashing(alpha), [A, B]), rho)
    assert abs(cv - (cvs + 1j * alpha * cva)) <= 1e-9


def test_covariance_of_observable_with_itself_is_variance():
    rng = np.random.default_rng(3)
    A = random_hermitian(4, rng)
    rho = random_density(4, rng)
    var = np.trace(A @ A @ rho) - np.trace(A @ rho) ** 2
    cv = quantum_covariance(identity, identity, build_qjsd(alpha_hashing(1), [A, A]), rho)
    assert cv == pytest.approx(var, abs=1e-12)


def test_covariance_affine_in_alpha():
    rng = np.random.default_rng(4)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    rho = ket_density(eigendecompose(B).projector(eigendecompose(B).eigenvalues[0])[:, 0])
    rho = (rho + random_density(3, rng)) / 2
    cv = {a: quantum_covariance(identity, identity, build_qjsd(alpha_hashing(a), [A, B]), rho) for a in (0, 1, 1j)}
    slope = cv[1] - cv[0]
    assert cv[1j] == pytest.approx(cv[0] + 1j * slope, abs=1e-12)
    assert cv[0].imag == pytest.approx(0, abs=1e-12)


@given(seeds, st.integers(2, 6), alphas)
def test_conditional_expectation_closed_form_and_tower(seed, d, alpha):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(d, rng), random_hermitian(d, rng)
    rho = random_density(d, rng)
    Q = build_qjsd(alpha_hashing(alpha), [A, B])
    ce = conditional_expectation(lambda a: a**2 - a, Q, rho)
    FA = A @ A - A
    for b, P in eigendecompose(B).atoms:
        T = np.trace(P @ FA @ rho) / np.trace(P @ rho)
        assert abs(ce[b] - (T.real + 1j * alpha * T.imag)) <= 1e-9
    tower = sum(v * ce.probabilities[b] for b, v in ce.values.items())
    assert abs(tower - np.trace(FA @ rho)) <= 1e-9
    np.testing.assert_allclose(
        ce.operator_form, sum(ce[b] * P for b, P in eigendecompose(B).atoms), atol=1e-12
    )
    g = lambda b: np.cos(b) + 1j * b  # noqa: E731
    assert verify_correlation_preservation(lambda a: a**2 - a, g, Q, rho) <= 1e-9


def test_conditional_expectation_commuting_is_classical():
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    B = np.diag([0.0, 0.0, 1.0, 1.0])
    rho = np.diag([0.1, 0.2, 0.3, 0.4])
    ce = conditional_expectation(identity, build_qjsd(alpha_hashing(1j), [A, B]), rho)
    assert ce[0.0] == pytest.approx((0.1 + 0.4) / 0.3)
    assert ce[1.0] == pytest.approx((0.9 + 1.6) / 0.7)


def test_excluded_atoms_and_degenerate_conditioning():
    Q = build_qjsd(alpha_hashing(1), [PAULI_X, PAULI_Z])
    ce = conditional_expectation(identity, Q, np.diag([1.0, 0.0]))
    assert list(ce.values) == [1.0]
    assert ce.excluded == {-1.0: 0.0}
    with pytest.raises(DegenerateConditioningError):
        conditional_expectation(identity, Q, np.diag([1.0, 0.0]), threshold=2.0)


def test_weak_value_examples():
    plus = ket_density([1, 1])
    assert weak_value(PAULI_X, PAULI_Z, 1, plus) == pytest.approx(1)
    psi = ket_density([1, 0.1])
    assert abs(weak_value(PAULI_X, PAULI_Z, -1, psi) - 10) <= 1e-9
    rng = np.random.default_rng(5)
    A = random_hermitian(3, rng)
    for b, P in eigendecompose(A).atoms:
        assert weak_value(A, A, b, random_density(3, rng)) == pytest.approx(b, abs=1e-12)


def test_weak_value_pure_state_form():
    rng = np.random.default_rng(6)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    vals, vecs = np.linalg.eigh(B)
    for b, v in zip(vals, vecs.T):
        expected = (v.conj() @ A @ psi) / (v.conj() @ psi)
        assert weak_value(A, B, b, np.outer(psi, psi.conj())) == pytest.approx(expected, abs=1e-10)


def test_degenerate_post_selection_carries_probability():
    with pytest.raises(DegeneratePostSelectionError) as err:
        weak_value(PAULI_X, PAULI_Z, -1, np.diag([1.0, 0.0]))
    assert err.value.probability == 0.0
    with pytest.raises(DegeneratePostSelectionError):
        weak_value(PAULI_X, PAULI_Z, 0.5, np.eye(2) / 2)


def test_weak_value_is_kd_conditional_expectation():
    for d in (2, 3):
        rng = np.random.default_rng(d)
        A, B = random_hermitian(d, rng), random_hermitian(d, rng)
        rho = random_density(d, rng)
        ce = conditional_expectation(identity, build_qjsd(alpha_hashing(1), [A, B]), rho)
        for b, P in eigendecompose(B).atoms:
            direct = np.trace(P @ A @ rho) / np.trace(P @ rho)
            assert abs(ce[b] - direct) <= 1e-12
            assert abs(weak_value(A, B, b, rho) - direct) <= 1e-12


def test_two_state_value():
    psi = ket_density([1, np.exp(1j * np.pi / 3)])
    A = np.array([[0.5, 1 - 1j], [1 + 1j, -0.2]])
    aw = weak_value(A, PAULI_Z, 1, psi)
    assert aw.imag != pytest.approx(0)
    assert two_state_value(A, PAULI_Z, 1, psi, 1) == pytest.approx(aw)
    assert two_state_value(A, PAULI_Z, 1, psi, 0) == pytest.approx(aw.real)
    rotated = two_state_value(A, PAULI_Z, 1, psi, 1j)
    assert rotated == pytest.approx(aw.real - aw.imag)
    ce = conditional_expectation(identity, build_qjsd(alpha_hashing(1j), [A, PAULI_Z]), psi)
    assert ce[1.0] == pytest.approx(rotated, abs=1e-12)


@given(seeds)
def test_hermitian_symmetry_iff_real(seed):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    rho = random_density(3, rng)
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    f = lambda a, b: c[0] * a + c[1] * b**2  # noqa: E731
    g = lambda a, b: c[2] * a * b + c[3]  # noqa: E731
    mh = build_qjsd(alpha_hashing(0), [A, B])
    assert abs(sesquilinear_form(f, g, mh, rho) - np.conj(sesquilinear_form(g, f, mh, rho))) <= 1e-10


def test_kd_symmetry_witness():
    rho = ket_density([1, np.exp(1j * np.pi / 4)])
    kd = build_qjsd(alpha_hashing(1), [PAULI_X, PAULI_Z])
    f = lambda a, b: a  # noqa: E731
    g = lambda a, b: b  # noqa: E731
    assert abs(sesquilinear_form(f, g, kd, rho) - np.conj(sesquilinear_form(g, f, kd, rho))) > 0.1
    assert quasi_correlation(identity, identity, kd, rho) == pytest.approx(sesquilinear_form(f, g, kd, rho))


@given(seeds, st.integers(2, 5))
def test_positive_definite_when_distribution_nonnegative(seed, d):
    rng = np.random.default_rng(seed)
    A, B = random_commuting_pair(d, rng)
    rho = random_density(d, rng)
    Q = build_qjsd(alpha_hashing(1), [A, B])
    assert np.all(quasi_classicalise(Q, rho).values.real >= -1e-12)
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    f = lambda x: c[0] + c[1] * x + c[2] * x**2  # noqa: E731
    assert quasi_correlation(f, f, build_qjsd(alpha_hashing(1), [A, A]), rho).real >= -1e-12


@given(seeds)
def test_mh_range_when_nonnegative(seed):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    rho = random_density(3, rng)
    Q = build_qjsd(alpha_hashing(0), [A, B])
    values = quasi_classicalise(Q, rho).values.real
    ce = conditional_expectation(identity, Q, rho)
    lo, hi = np.linalg.eigvalsh(A)[[0, -1]]
    if np.all(values >= -1e-12):
        assert all(lo - 1e-9 <= v.real <= hi + 1e-9 for v in ce.values.values())

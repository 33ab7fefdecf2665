import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qworkscope.numerics import (
    NotHermitianError,
    frobenius_distance,
    hermitian_eigendecompose,
    ordered_product,
    random_hermitian,
    unitarity_defect,
    unitary_from_hamiltonian,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


class TestEigendecompose:
    def test_pauli_x(self):
        eig = hermitian_eigendecompose(SX)
        np.testing.assert_allclose(eig.eigenvalues, [-1, 1], atol=1e-14)
        minus = np.array([-1, 1]) / np.sqrt(2)
        plus = np.array([1, 1]) / np.sqrt(2)
        assert abs(abs(np.vdot(minus, eig.eigenvectors[:, 0])) - 1) < 1e-12
        assert abs(abs(np.vdot(plus, eig.eigenvectors[:, 1])) - 1) < 1e-12

    def test_zero_matrix(self):
        eig = hermitian_eigendecompose(np.zeros((3, 3)))
        np.testing.assert_allclose(eig.eigenvalues, 0, atol=0)
        np.testing.assert_allclose(eig.eigenvectors.conj().T @ eig.eigenvectors, np.eye(3), atol=1e-12)

    def test_random_reconstruction(self, rng):
        h = random_hermitian(4, rng)
        eig = hermitian_eigendecompose(h)
        assert frobenius_distance(eig.reconstruct(), h) <= 1e-10 * np.linalg.norm(h)

    def test_rejects_non_hermitian(self):
        h = np.array([[0, 1], [0.5, 0]])
        with pytest.raises(NotHermitianError) as info:
            hermitian_eigendecompose(h)
        assert info.value.asymmetry == pytest.approx(0.5)

    def test_degenerate_spectrum_orthonormal(self):
        h = np.diag([1.0, 1.0, 2.0]).astype(complex)
        eig = hermitian_eigendecompose(h)
        v = eig.eigenvectors
        assert frobenius_distance(v.conj().T @ v, np.eye(3)) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(dim=st.integers(2, 16), seed=st.integers(0, 2**32 - 1))
    def test_reconstruction_property(self, dim, seed):
        h = random_hermitian(dim, np.random.default_rng(seed))
        eig = hermitian_eigendecompose(h)
        assert np.all(np.diff(eig.eigenvalues) >= 0)
        v = eig.eigenvectors
        assert frobenius_distance(v.conj().T @ v, np.eye(dim)) <= 1e-12
        assert frobenius_distance(eig.reconstruct(), h) <= 1e-10 * np.linalg.norm(h)


class TestUnitary:
    def test_zero_hamiltonian(self):
        np.testing.assert_allclose(unitary_from_hamiltonian(np.zeros((3, 3)), 7.3), np.eye(3), atol=1e-15)

    def test_pauli_x_half_period(self):
        np.testing.assert_allclose(unitary_from_hamiltonian(SX, np.pi), -np.eye(2), atol=1e-12)

    def test_short_time_taylor(self):
        t = 1e-4
        taylor = np.eye(2) - 1j * SX * t - SX @ SX * t**2 / 2
        assert frobenius_distance(unitary_from_hamiltonian(SX, t), taylor) < 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            unitary_from_hamiltonian(np.array([[0, 1j], [1j, 0]]), 1.0)

    @settings(max_examples=30, deadline=None)
    @given(dim=st.integers(2, 12), seed=st.integers(0, 2**32 - 1), t=st.floats(-50, 50))
    def test_unitarity_property(self, dim, seed, t):
        u = unitary_from_hamiltonian(random_hermitian(dim, np.random.default_rng(seed)), t)
        assert unitarity_defect(u) <= 1e-10

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), t1=st.floats(-5, 5), t2=st.floats(-5, 5))
    def test_group_property(self, seed, t1, t2):
        h = random_hermitian(5, np.random.default_rng(seed))
        lhs = unitary_from_hamiltonian(h, t1 + t2)
        rhs = unitary_from_hamiltonian(h, t1) @ unitary_from_hamiltonian(h, t2)
        assert frobenius_distance(lhs, rhs) <= 1e-10


class TestFrobenius:
    def test_identical(self):
        assert frobenius_distance(np.eye(2), np.eye(2)) == 0

    def test_sign_flip(self):
        assert frobenius_distance(np.eye(2), -np.eye(2)) == pytest.approx(2 * np.sqrt(2))

    def test_paulis(self):
        # |sx - sy|^2 = |1 + i|^2 + |1 - i|^2 = 4
        assert frobenius_distance(SX, SY) == pytest.approx(2.0)

    def test_symmetric(self, rng):
        a, b = random_hermitian(3, rng), random_hermitian(3, rng)
        assert frobenius_distance(a, b) == frobenius_distance(b, a)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            frobenius_distance(np.eye(2), np.eye(3))


def test_ordered_product_matches_loop(rng):
    mats = rng.normal(size=(7, 3, 3)) + 1j * rng.normal(size=(7, 3, 3))
    expected = np.eye(3)
    for m in mats:
        expected = m @ expected
    np.testing.assert_allclose(ordered_product(mats), expected, rtol=1e-12, atol=1e-12)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qworkscope.numerics import EigenSystem, hermitian_eigendecompose, random_hermitian
from qworkscope.states import (
    coherent_gibbs_state,
    decohere_for_measurement,
    gibbs_state,
    purity,
    validate_density_matrix,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)


class TestGibbs:
    def test_infinite_temperature(self, rng):
        h = random_hermitian(4, rng)
        rho, z = gibbs_state(h, 0.0)
        np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-14)
        assert z == pytest.approx(4)

    def test_two_level_weights(self):
        beta = 0.01
        rho, z = gibbs_state(SX, beta)
        z0 = np.exp(-beta) + np.exp(beta)
        assert z == pytest.approx(z0, rel=1e-14)
        eig = hermitian_eigendecompose(SX)
        pops = np.real(np.diag(eig.to_basis(rho)))
        np.testing.assert_allclose(pops, [np.exp(beta) / z0, np.exp(-beta) / z0], rtol=1e-13)

    def test_zero_temperature_limit(self, rng):
        h = random_hermitian(5, rng)
        rho, _ = gibbs_state(h, 1e3)
        ground = hermitian_eigendecompose(h).eigenvectors[:, 0]
        np.testing.assert_allclose(rho, np.outer(ground, ground.conj()), atol=1e-10)

    def test_rejects_negative_beta(self):
        with pytest.raises(ValueError):
            gibbs_state(SX, -1.0)


class TestCoherentGibbs:
    def test_two_level_amplitudes(self):
        beta = 0.01
        z0 = 2 * np.cosh(beta)
        plus = np.array([1, 1]) / np.sqrt(2)
        minus = np.array([-1, 1]) / np.sqrt(2)
        eig = EigenSystem(np.array([-1.0, 1.0]), np.column_stack([minus, plus]))
        psi = np.sqrt(np.exp(-beta) / z0) * plus + np.sqrt(np.exp(beta) / z0) * minus
        np.testing.assert_allclose(coherent_gibbs_state(eig, beta), np.outer(psi, psi.conj()), atol=1e-15)

    def test_uniform_superposition(self, rng):
        h = random_hermitian(3, rng)
        eig = hermitian_eigendecompose(h)
        r = eig.to_basis(coherent_gibbs_state(eig, 0.0))
        np.testing.assert_allclose(r, np.full((3, 3), 1 / 3), atol=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), beta=st.floats(0, 20))
    def test_pure_and_same_diagonal(self, seed, beta):
        h = random_hermitian(4, np.random.default_rng(seed))
        eig = hermitian_eigendecompose(h)
        coh = coherent_gibbs_state(eig, beta)
        th, _ = gibbs_state(eig, beta)
        assert abs(purity(coh) - 1) < 1e-12
        np.testing.assert_allclose(np.diag(eig.to_basis(coh)), np.diag(eig.to_basis(th)), atol=1e-12)


class TestDecohere:
    def test_wide_detector_is_identity(self, rng):
        eig = hermitian_eigendecompose(random_hermitian(3, rng))
        rho = coherent_gibbs_state(eig, 0.3)
        np.testing.assert_allclose(decohere_for_measurement(rho, eig, 1e12), rho, atol=1e-10)

    def test_sharp_detector_dephases(self, rng):
        eig = hermitian_eigendecompose(random_hermitian(3, rng))
        rho = coherent_gibbs_state(eig, 0.3)
        out = eig.to_basis(decohere_for_measurement(rho, eig, 1e-12))
        np.testing.assert_allclose(out, np.diag(np.diag(eig.to_basis(rho))), atol=1e-10)

    def test_two_level_damping(self):
        eig = hermitian_eigendecompose(SX)  # gap 2
        rho = coherent_gibbs_state(eig, 0.0)
        out = eig.to_basis(decohere_for_measurement(rho, eig, 1.0))
        assert out[0, 1] == pytest.approx(0.5 * np.exp(-1.0), rel=1e-13)

    def test_rejects_nonpositive_sigma(self):
        eig = hermitian_eigendecompose(SX)
        with pytest.raises(ValueError):
            decohere_for_measurement(np.eye(2) / 2, eig, 0.0)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.01, 10))
    def test_valid_state_and_diagonal_invariance(self, seed, sigma):
        g = np.random.default_rng(seed)
        eig = hermitian_eigendecompose(random_hermitian(4, g))
        a = g.normal(size=(4, 4)) + 1j * g.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        validate_density_matrix(decohere_for_measurement(rho, eig, sigma))
        th, _ = gibbs_state(eig, 0.7)
        np.testing.assert_allclose(decohere_for_measurement(th, eig, sigma), th, atol=1e-14)

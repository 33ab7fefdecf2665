import numpy as np
import pytest

from qworkscope.numerics import (
    frobenius_distance,
    hermitian_eigendecompose,
    random_hermitian,
    random_unitary,
    unitarity_defect,
    unitary_from_hamiltonian,
)
from qworkscope.protocol import (
    ConvergenceError,
    DrivingProtocol,
    ProtocolError,
    auto_propagate,
    propagate,
    transition_amplitudes,
)
from qworkscope.spin import SIGMA_X, SIGMA_Y, SpinParams, spin_protocol


class TestPropagate:
    @pytest.mark.parametrize("steps", [1, 7, 64])
    def test_constant_hamiltonian_exact(self, rng, steps):
        h = random_hermitian(3, rng)
        res = propagate(DrivingProtocol.constant(h, 2.5), steps)
        assert frobenius_distance(res.U, unitary_from_hamiltonian(h, 2.5)) < 1e-12
        assert res.estimated_error < 1e-12

    def test_fast_quench_converged(self):
        prot = spin_protocol(SpinParams(tPrime=0.01))
        u1000 = propagate(prot, 1000).U
        u4000 = propagate(prot, 4000).U
        assert frobenius_distance(u1000, u4000) < 1e-6
        assert unitarity_defect(u1000) < 1e-12

    def test_second_order_convergence(self):
        prot = spin_protocol(SpinParams(tPrime=1.0))
        e1 = propagate(prot, 256).estimated_error
        e2 = propagate(prot, 512).estimated_error
        assert 3.5 <= e1 / e2 <= 4.5

    def test_later_times_act_last(self):
        # two-piece protocol: sx on the first half, sy on the second
        prot = DrivingProtocol(lambda t: SIGMA_X if t < 0.5 else SIGMA_Y, 1.0, 2)
        expected = unitary_from_hamiltonian(SIGMA_Y, 0.5) @ unitary_from_hamiltonian(SIGMA_X, 0.5)
        assert frobenius_distance(propagate(prot, 2).U, expected) < 1e-14

    def test_protocol_failure_propagates(self):
        def bad(t):
            if t > 0.5:
                raise RuntimeError("field generator offline")
            return SIGMA_X

        with pytest.raises(ProtocolError, match="offline"):
            propagate(DrivingProtocol(bad, 1.0, 2), 4)

    def test_non_hermitian_protocol_rejected(self):
        with pytest.raises(ValueError):
            propagate(DrivingProtocol(lambda t: np.array([[0, 1], [0, 0]]), 1.0, 2), 4)

    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            propagate(DrivingProtocol.constant(SIGMA_X, 1.0), 0)


class TestAutoPropagate:
    def test_constant_converges_immediately(self):
        res = auto_propagate(DrivingProtocol.constant(SIGMA_X, 3.0), 1e-10)
        assert res.steps == 128
        assert res.estimated_error <= 1e-10

    def test_spin_protocol_self_consistent(self):
        prot = spin_protocol(SpinParams(tPrime=1.0))
        res = auto_propagate(prot, 1e-9)
        assert res.estimated_error <= 1e-9
        finer = propagate(prot, 2 * res.steps).U
        assert frobenius_distance(res.U, finer) <= 1e-9
        assert unitarity_defect(res.U) <= 1e-8

    @pytest.mark.slow
    def test_unreachable_tolerance(self):
        prot = spin_protocol(SpinParams(tPrime=1.0))
        with pytest.raises(ConvergenceError) as info:
            auto_propagate(prot, 1e-30)
        assert info.value.steps == 2**20
        assert info.value.last_error > 1e-30

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(ValueError):
            auto_propagate(DrivingProtocol.constant(SIGMA_X, 1.0), 0.0)


class TestTransitionAmplitudes:
    def test_identity(self, rng):
        eig = hermitian_eigendecompose(random_hermitian(3, rng))
        np.testing.assert_allclose(transition_amplitudes(np.eye(3), eig, eig), np.eye(3), atol=1e-14)

    def test_sudden_x_to_y(self):
        amps = transition_amplitudes(np.eye(2), hermitian_eigendecompose(SIGMA_X), hermitian_eigendecompose(1.8 * SIGMA_Y))
        np.testing.assert_allclose(np.abs(amps) ** 2, 0.5, atol=1e-14)

    def test_unit_norms(self, rng):
        u = random_unitary(5, rng)
        amps = transition_amplitudes(
            u, hermitian_eigendecompose(random_hermitian(5, rng)), hermitian_eigendecompose(random_hermitian(5, rng))
        )
        np.testing.assert_allclose(np.sum(np.abs(amps) ** 2, axis=0), 1, atol=1e-12)
        np.testing.assert_allclose(np.sum(np.abs(amps) ** 2, axis=1), 1, atol=1e-12)

    def test_spin_transition_matrix_doubly_stochastic(self):
        p = SpinParams(tPrime=1.0)
        u = auto_propagate(spin_protocol(p), 1e-9).U
        probs = np.abs(
            transition_amplitudes(u, hermitian_eigendecompose(SIGMA_X), hermitian_eigendecompose(1.8 * SIGMA_Y))
        ) ** 2
        np.testing.assert_allclose(probs.sum(axis=0), 1, atol=1e-8)
        np.testing.assert_allclose(probs.sum(axis=1), 1, atol=1e-8)

    def test_dim_mismatch(self, rng):
        e2 = hermitian_eigendecompose(SIGMA_X)
        e3 = hermitian_eigendecompose(random_hermitian(3, rng))
        with pytest.raises(ValueError):
            transition_amplitudes(np.eye(2), e2, e3)

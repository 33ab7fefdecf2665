"""Quantum work statistics measured with a squeezed harmonic-oscillator detector."""

from .numerics import EigenSystem, frobenius_distance, hermitian_eigendecompose, unitary_from_hamiltonian
from .protocol import DrivingProtocol, PropagationResult, auto_propagate, propagate, transition_amplitudes
from .states import coherent_gibbs_state, decohere_for_measurement, gibbs_state
from .work import (
    ProcessSnapshot,
    WorkDistribution,
    analytic_moments,
    build_work_distribution,
    characteristic_function,
    density,
    fdt_residual,
    jarzynski_residual,
    make_snapshot,
    tpm_distribution,
)

__version__ = "0.1.0"

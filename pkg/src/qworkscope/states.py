"""System states: Gibbs, coherent Gibbs, and the measurement-dephased state.

States are density matrices in the computational basis. Constructors take
the Hamiltonian (or an explicit eigenbasis) and build the state in that
eigenbasis before transforming back.
"""

from __future__ import annotations

import numpy as np

from .numerics import EigenSystem, as_square, hermitian_asymmetry, hermitian_eigendecompose

STATE_TOL = 1e-10


class InvalidStateError(ValueError):
    pass


def validate_density_matrix(rho, tol: float = STATE_TOL) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; returns the array."""
    rho = as_square(rho, "density matrix")
    asym = hermitian_asymmetry(rho)
    if asym > tol:
        raise InvalidStateError(f"density matrix not Hermitian (asymmetry {asym:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvalidStateError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def _eigensystem(h_or_eig) -> EigenSystem:
    if isinstance(h_or_eig, EigenSystem):
        return h_or_eig
    return hermitian_eigendecompose(h_or_eig)


def _boltzmann(energies: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    # shift by the ground energy so large beta does not overflow
    e0 = energies.min()
    w = np.exp(-beta * (energies - e0))
    z_shifted = w.sum()
    log_z = np.log(z_shifted) - beta * e0
    with np.errstate(over="ignore"):
        z = float(np.exp(log_z))
    return w / z_shifted, z


def partition_function(h, beta: float) -> float:
    return _boltzmann(_eigensystem(h).eigenvalues, beta)[1]


def log_partition_function(h, beta: float) -> float:
    e = _eigensystem(h).eigenvalues
    e0 = e.min()
    return float(np.log(np.exp(-beta * (e - e0)).sum()) - beta * e0)


def gibbs_state(h, beta: float) -> tuple[np.ndarray, float]:
    """Thermal state ``exp(-beta H)/Z`` and its partition function ``Z``."""
    eig = _eigensystem(h)
    p, z = _boltzmann(eig.eigenvalues, beta)
    return eig.from_basis(np.diag(p).astype(complex)), z


def coherent_gibbs_state(h, beta: float) -> np.ndarray:
    """Pure state with amplitudes ``sqrt(exp(-beta E_n)/Z)`` on each eigenvector.

    Amplitudes are real and positive in the given eigenbasis; pass an
    :class:`EigenSystem` to fix the eigenvector phases explicitly.
    """
    eig = _eigensystem(h)
    p, _ = _boltzmann(eig.eigenvalues, beta)
    psi = eig.eigenvectors @ np.sqrt(p)
    return np.outer(psi, psi.conj())


def dephasing_kernel(energies: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian kernel ``exp(-(E_m - E_n)^2 / (4 sigma^2))``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    de = energies[:, None] - energies[None, :]
    return np.exp(-(de**2) / (4.0 * sigma**2))


def decohere_for_measurement(rho, eig0: EigenSystem, sigma: float) -> np.ndarray:
    """State of the system after the first coupling to a detector of resolution ``sigma``.

    Off-diagonal elements in the ``eig0`` basis are damped by
    ``exp(-(E_m - E_n)^2 / (4 sigma^2))``; populations are untouched.
    """
    kernel = dephasing_kernel(eig0.eigenvalues, sigma)
    rho = as_square(rho, "density matrix")
    return eig0.from_basis(eig0.to_basis(rho) * kernel)


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))

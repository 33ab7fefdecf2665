"""Work statistics under a single squeezed-detector measurement.

A :class:`ProcessSnapshot` holds everything the closed form needs: the two
eigenbases, the transition amplitudes between them, the initial system
state and the detector resolution ``sigma``. From it we build the work
distribution as a Gaussian mixture

    P(W) = sum_{l,n} P_n |U_ln|^2 N(W | F_l - E_n, sigma)
         + sum_{l, m != n} rho~_mn U_lm U*_ln N(W | F_l - (E_m + E_n)/2, sigma)

where ``rho~`` is the initial state after dephasing by the first coupling.
The characteristic function, moments and fluctuation relations are computed
from Heisenberg-picture traces, independently of the mixture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .numerics import EigenSystem, hermitian_eigendecompose
from .protocol import DrivingProtocol, auto_propagate, transition_amplitudes
from .states import (
    decohere_for_measurement,
    dephasing_kernel,
    gibbs_state,
    log_partition_function,
    validate_density_matrix,
)

WEIGHT_TOL = 1e-9
AMPLITUDE_TOL = 1e-8
ATOM_MERGE_TOL = 1e-12
ATOM_PROB_FLOOR = 1e-14
SQRT_2PI = np.sqrt(2.0 * np.pi)


def sigma_from_squeezing(r: float) -> float:
    """Measurement error of a detector squeezed by ``r``: ``exp(-r)/sqrt(2)``."""
    return float(np.exp(-r) / np.sqrt(2.0))


def squeezing_from_sigma(sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return float(-np.log(np.sqrt(2.0) * sigma))


class InvalidSnapshotError(ValueError):
    pass


class NotThermalError(ValueError):
    """The initial state is not the Gibbs state the identity requires."""


@dataclass(frozen=True)
class ProcessSnapshot:
    eig0: EigenSystem
    eig_t: EigenSystem
    amplitudes: np.ndarray
    rho0: np.ndarray
    sigma: float

    def __post_init__(self):
        d = self.eig0.dim
        if self.eig_t.dim != d or self.amplitudes.shape != (d, d) or np.shape(self.rho0) != (d, d):
            raise InvalidSnapshotError("snapshot components have inconsistent dimensions")
        if not self.sigma > 0:
            raise InvalidSnapshotError(f"sigma must be > 0, got {self.sigma}")
        norms = np.concatenate(
            [np.sum(np.abs(self.amplitudes) ** 2, axis=0), np.sum(np.abs(self.amplitudes) ** 2, axis=1)]
        )
        if np.max(np.abs(norms - 1)) > AMPLITUDE_TOL:
            raise InvalidSnapshotError(
                f"transition amplitudes are not unitary (norm defect {np.max(np.abs(norms - 1)):.2e})"
            )
        try:
            validate_density_matrix(self.rho0)
        except ValueError as exc:
            raise InvalidSnapshotError(str(exc)) from exc

    @property
    def dim(self) -> int:
        return self.eig0.dim

    @property
    def squeezing(self) -> float:
        return squeezing_from_sigma(self.sigma)

    @property
    def propagator(self) -> np.ndarray:
        """System propagator in the computational basis."""
        return self.eig_t.eigenvectors @ self.amplitudes @ self.eig0.eigenvectors.conj().T

    @property
    def h0(self) -> np.ndarray:
        return self.eig0.reconstruct()

    @property
    def h_t(self) -> np.ndarray:
        return self.eig_t.reconstruct()

    @property
    def dephased(self) -> np.ndarray:
        """Initial state after the first coupling, in the computational basis."""
        return decohere_for_measurement(self.rho0, self.eig0, self.sigma)

    def with_sigma(self, sigma: float) -> "ProcessSnapshot":
        return ProcessSnapshot(self.eig0, self.eig_t, self.amplitudes, self.rho0, sigma)

    def with_state(self, rho0) -> "ProcessSnapshot":
        return ProcessSnapshot(self.eig0, self.eig_t, self.amplitudes, np.asarray(rho0, complex), self.sigma)

    def work_range(self) -> tuple[float, float]:
        """Smallest and largest energy difference ``F_l - E_m``."""
        dw = self.eig_t.eigenvalues[:, None] - self.eig0.eigenvalues[None, :]
        return float(dw.min()), float(dw.max())


def make_snapshot(h0, h_t, propagator, rho0, sigma: float, eig0=None, eig_t=None) -> ProcessSnapshot:
    """Assemble a snapshot from Hamiltonians and a propagator in the computational basis.

    Explicit eigensystems may be supplied to fix eigenvector phases.
    """
    eig0 = eig0 if eig0 is not None else hermitian_eigendecompose(h0)
    eig_t = eig_t if eig_t is not None else hermitian_eigendecompose(h_t)
    amps = transition_amplitudes(propagator, eig0, eig_t)
    return ProcessSnapshot(eig0, eig_t, amps, np.asarray(rho0, dtype=complex), float(sigma))


def snapshot_from_protocol(protocol: DrivingProtocol, rho0, sigma: float, tol: float = 1e-9) -> ProcessSnapshot:
    result = auto_propagate(protocol, tol)
    return make_snapshot(protocol.initial, protocol.final, result.U, rho0, sigma)


@dataclass(frozen=True)
class WorkDistribution:
    """Finite Gaussian mixture with a shared width.

    ``coherent[k]`` marks components that stem from initial coherences;
    their weights are complex and come in conjugate pairs.
    """

    weights: np.ndarray
    means: np.ndarray
    sigma: float
    coherent: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coherent is None:
            object.__setattr__(self, "coherent", np.zeros(len(self.weights), dtype=bool))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> complex:
        return complex(np.sum(self.weights))

    def part(self, coherent: bool) -> "WorkDistribution":
        mask = self.coherent == coherent
        return WorkDistribution(self.weights[mask], self.means[mask], self.sigma, self.coherent[mask])

    @property
    def incoherent_part(self) -> "WorkDistribution":
        return self.part(False)

    @property
    def coherent_part(self) -> "WorkDistribution":
        return self.part(True)

    def support(self, n_sigma: float = 8.0) -> tuple[float, float]:
        return float(self.means.min() - n_sigma * self.sigma), float(self.means.max() + n_sigma * self.sigma)

    def __call__(self, w):
        return density(self, w)


def _gaussian(w, mu, sigma):
    return np.exp(-((w - mu) ** 2) / (2.0 * sigma**2)) / (SQRT_2PI * sigma)


def build_work_distribution(snap: ProcessSnapshot) -> WorkDistribution:
    e0 = snap.eig0.eigenvalues
    et = snap.eig_t.eigenvalues
    u = snap.amplitudes
    d = snap.dim
    rho = snap.eig0.to_basis(snap.rho0) * dephasing_kernel(e0, snap.sigma)
    p = np.real(np.diag(rho))

    # incoherent: (l, n) -> P_n |U_ln|^2 at F_l - E_n
    inc_w = (np.abs(u) ** 2 * p[None, :]).ravel().astype(complex)
    inc_mu = (et[:, None] - e0[None, :]).ravel()

    # coherent: (l, m, n), m != n -> rho_mn U_lm U*_ln at F_l - (E_m + E_n)/2
    ll, mm, nn = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing="ij")
    off = mm != nn
    ll, mm, nn = ll[off], mm[off], nn[off]
    coh_w = rho[mm, nn] * u[ll, mm] * np.conj(u[ll, nn])
    coh_mu = et[ll] - 0.5 * (e0[mm] + e0[nn])

    # (l, m, n) and (l, n, m) must be complex conjugates for a real density
    partner = ll * d * d + nn * d + mm
    index = {key: i for i, key in enumerate(ll * d * d + mm * d + nn)}
    if coh_w.size:
        pair = np.array([index[k] for k in partner])
        if np.max(np.abs(coh_w - np.conj(coh_w[pair]))) > WEIGHT_TOL:
            raise InvalidSnapshotError("coherent components are not conjugate-paired")

    weights = np.concatenate([inc_w, coh_w])
    total = weights.sum()
    if abs(total - 1) > WEIGHT_TOL:
        raise InvalidSnapshotError(f"component weights sum to {total:.12g}, expected 1")
    return WorkDistribution(
        weights=weights,
        means=np.concatenate([inc_mu, coh_mu]),
        sigma=snap.sigma,
        coherent=np.concatenate([np.zeros(inc_w.size, bool), np.ones(coh_w.size, bool)]),
    )


def density(dist: WorkDistribution, w):
    """Real density of ``dist`` at ``w`` (scalar or array)."""
    w_arr = np.asarray(w, dtype=float)
    flat = w_arr.reshape(-1)
    vals = np.zeros(flat.shape, dtype=complex)
    # chunk over grid points to keep the (points x components) table small
    step = max(1, 2**20 // max(1, len(dist)))
    for i in range(0, flat.size, step):
        chunk = flat[i : i + step]
        vals[i : i + step] = _gaussian(chunk[:, None], dist.means[None, :], dist.sigma) @ dist.weights
    imag = np.max(np.abs(vals.imag)) if vals.size else 0.0
    if imag > WEIGHT_TOL:
        raise ArithmeticError(f"work density has imaginary residual {imag:.3e}")
    out = vals.real.reshape(w_arr.shape)
    return float(out) if out.ndim == 0 else out


def tpm_distribution(snap: ProcessSnapshot) -> list[tuple[float, float]]:
    """Sharp two-point-measurement atoms ``(probability, work)``, sorted by work.

    Atoms closer than 1e-12 in work are merged; atoms with vanishing
    probability (below 1e-14) are dropped.
    """
    e0 = snap.eig0.eigenvalues
    et = snap.eig_t.eigenvalues
    rho = snap.eig0.to_basis(snap.rho0)
    p = np.real(np.diag(rho))
    probs = (np.abs(snap.amplitudes) ** 2 * p[None, :]).ravel()
    works = (et[:, None] - e0[None, :]).ravel()
    order = np.argsort(works, kind="stable")
    atoms: list[list[float]] = []
    for k in order:
        if atoms and abs(works[k] - atoms[-1][1]) <= ATOM_MERGE_TOL:
            atoms[-1][0] += probs[k]
        else:
            atoms.append([probs[k], works[k]])
    return [(float(pr), float(wv)) for pr, wv in atoms if pr > ATOM_PROB_FLOOR]


def _heisenberg_final(snap: ProcessSnapshot) -> EigenSystem:
    """Eigensystem of ``U^dag H(t') U`` expressed in the initial energy basis."""
    # the eigenvectors of U^dag H U are U^dag |F_l>, i.e. the rows of the amplitude matrix
    return EigenSystem(snap.eig_t.eigenvalues, snap.amplitudes.conj().T)


def characteristic_function(snap: ProcessSnapshot, kappa: complex) -> complex:
    """``chi(k) = exp(-k^2 s^2/2) Tr[e^{ik HH(t')} e^{-ik HH(0)/2} rho~ e^{-ik HH(0)/2}]``.

    ``kappa`` may be complex; ``kappa = i beta`` gives the exponentiated-work average.
    """
    kappa = complex(kappa)
    e0 = snap.eig0.eigenvalues
    rho = snap.eig0.to_basis(snap.dephased)
    final = _heisenberg_final(snap)
    vf = final.eigenvectors
    ef = (vf * np.exp(1j * kappa * final.eigenvalues)) @ vf.conj().T
    half = np.exp(-0.5j * kappa * e0)
    inner = half[:, None] * rho * half[None, :]
    return complex(np.exp(-(kappa**2) * snap.sigma**2 / 2.0) * np.trace(ef @ inner))


class Moments(NamedTuple):
    mean: float
    second: float
    variance: float
    energy_change_variance: float


def analytic_moments(snap: ProcessSnapshot) -> Moments:
    """Mean, second moment and variance of the work from operator traces.

    ``energy_change_variance`` is the variance of the Heisenberg-picture
    energy change in the dephased state, i.e. ``variance - sigma^2``.
    """
    h0 = snap.h0
    ht = snap.h_t
    u = snap.propagator
    rho0 = snap.dephased
    rho_t = u @ rho0 @ u.conj().T
    mean = float(np.real(np.trace(ht @ rho_t) - np.trace(h0 @ rho0)))

    delta = u.conj().T @ ht @ u - h0
    second = float(np.real(np.trace(delta @ delta @ rho0))) + snap.sigma**2
    variance = second - mean**2
    return Moments(mean, second, variance, variance - snap.sigma**2)


def free_energy_change(h0, h_t, beta: float) -> float:
    """``-ln(Z_t / Z_0) / beta``."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    return -(log_partition_function(h_t, beta) - log_partition_function(h0, beta)) / beta


def check_thermal(snap: ProcessSnapshot, beta: float, tol: float = 1e-10) -> None:
    expected = snap.eig0.to_basis(gibbs_state(snap.eig0, beta)[0])
    actual = snap.eig0.to_basis(snap.rho0)
    dev = float(np.max(np.abs(actual - expected)))
    if dev > tol:
        raise NotThermalError(
            f"initial state deviates from the Gibbs state at beta={beta} by {dev:.3e} "
            "in the initial energy basis"
        )


def jarzynski_rhs(snap: ProcessSnapshot, beta: float) -> float:
    df = free_energy_change(snap.h0, snap.h_t, beta)
    return float(np.exp(-beta * df + beta**2 * snap.sigma**2 / 2.0))


def jarzynski_residual(snap: ProcessSnapshot, beta: float) -> float:
    """``<exp(-beta W)> / (exp(-beta dF) exp(beta^2 sigma^2 / 2)) - 1`` for a thermal start."""
    check_thermal(snap, beta)
    lhs = characteristic_function(snap, 1j * beta)
    ratio = lhs / jarzynski_rhs(snap, beta)
    return float((ratio - 1).real)


def fdt_residual(snap: ProcessSnapshot, beta: float, delta_f: float) -> float:
    """``<W> - dF - beta/2 * var(energy change)``; not expected to vanish in general."""
    m = analytic_moments(snap)
    return m.mean - delta_f - 0.5 * beta * m.energy_change_variance


# ---------------------------------------------------------------------------
# quadrature and finite-difference routes used for cross-checks


def _breakpoints(dist: WorkDistribution, n_sigma: float = 8.0) -> np.ndarray:
    lo, hi = dist.support(n_sigma)
    inner = np.unique(np.round(dist.means, 12))
    return np.unique(np.concatenate([[lo], inner, [hi]]))


def integrate_density(dist: WorkDistribution, func=None, n_sigma: float = 8.0, tol: float = 1e-10) -> float:
    """``int f(W) P(W) dW`` over the mixture support by adaptive quadrature."""
    if func is None:
        f = lambda w: density(dist, w)  # noqa: E731
    else:
        f = lambda w: func(w) * density(dist, w)  # noqa: E731
    pts = _breakpoints(dist, n_sigma)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
        total += val
    return total


def quadrature_moments(dist: WorkDistribution) -> tuple[float, float]:
    mean = integrate_density(dist, lambda w: w)
    second = integrate_density(dist, lambda w: w * w)
    return mean, second


def excess_kurtosis(dist: WorkDistribution) -> float:
    mean = integrate_density(dist, lambda w: w)
    var = integrate_density(dist, lambda w: (w - mean) ** 2)
    m4 = integrate_density(dist, lambda w: (w - mean) ** 4)
    return m4 / var**2 - 3.0


def fourier_quadrature(dist: WorkDistribution, kappa: float) -> complex:
    re = integrate_density(dist, lambda w: np.cos(kappa * w))
    im = integrate_density(dist, lambda w: np.sin(kappa * w))
    return complex(re, im)


def characteristic_moments(snap: ProcessSnapshot, step: float | None = None) -> tuple[float, float]:
    """First two moments from central differences of ``chi`` at 0, one Richardson pass."""
    h = step if step is not None else 1e-4 / snap.sigma
    chi0 = characteristic_function(snap, 0.0)

    def d1(s):
        return (characteristic_function(snap, s) - characteristic_function(snap, -s)) / (2 * s)

    def d2(s):
        return (characteristic_function(snap, s) - 2 * chi0 + characteristic_function(snap, -s)) / s**2

    first = (4 * d1(h) - d1(2 * h)) / 3
    second = (4 * d2(h) - d2(2 * h)) / 3
    return float((-1j * first).real), float((-second).real)


def positivity_grid(dist: WorkDistribution, points: int = 2001) -> np.ndarray:
    lo = dist.means.min() - 6 * dist.sigma
    hi = dist.means.max() + 6 * dist.sigma
    return np.linspace(lo, hi, points)


def check_invariants(dist: WorkDistribution) -> None:
    """Normalization and grid positivity; raises ``ArithmeticError`` on violation."""
    total = dist.total_weight
    if abs(total - 1) > WEIGHT_TOL:
        raise ArithmeticError(f"weights sum to {total}")
    inc = dist.incoherent_part.weights
    if np.any(inc.real < -WEIGHT_TOL) or np.any(np.abs(inc.imag) > WEIGHT_TOL):
        raise ArithmeticError("incoherent weights must be real and nonnegative")
    lo = float(np.min(density(dist, positivity_grid(dist))))
    if lo < -WEIGHT_TOL:
        raise ArithmeticError(f"density is negative on the grid (min {lo:.3e})")

"""rf-driven nuclear spin: a two-level system under a rotating, ramped field.

    H(t) = nu(t) (sx cos(pi t / 2t') + sy sin(pi t / 2t')),
    nu(t) = nu0 (1 - t/t') + nuT t/t'

The field turns from x to y while its strength ramps linearly. The Pauli
matrices follow ``sx = |1><0| + |0><1|`` and ``sy = -i|1><0| + i|0><1|`` in
the ordered basis ``(|0>, |1>)``; the energy eigenbases are fixed to

    |+-> = (|1> +- |0>)/sqrt(2),     |+-i> = (|1> +- i|0>)/sqrt(2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .numerics import EigenSystem
from .protocol import ConvergenceError, DrivingProtocol, auto_propagate
from .states import coherent_gibbs_state, gibbs_state
from .work import (
    ProcessSnapshot,
    WorkDistribution,
    analytic_moments,
    build_work_distribution,
    density,
    fdt_residual,
    free_energy_change,
    jarzynski_residual,
    make_snapshot,
)

log = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)

_S2 = np.sqrt(2.0)
KET_PLUS = np.array([1, 1], dtype=complex) / _S2
KET_MINUS = np.array([-1, 1], dtype=complex) / _S2
KET_PLUS_I = np.array([1j, 1], dtype=complex) / _S2
KET_MINUS_I = np.array([-1j, 1], dtype=complex) / _S2

BASIS_TOL = 1e-10
SWEEP_TOL = 1e-9
STATE_KINDS = ("thermal", "coherent-gibbs")


class BasisMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SpinParams:
    nu0: float = 1.0
    nuT: float = 1.8
    tPrime: float = 1.0
    beta: float = 0.01
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("nu0", "nuT", "tPrime", "sigma"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    def replace(self, **changes) -> "SpinParams":
        return SpinParams(**{**self.__dict__, **changes})


class WorkBreakdown(NamedTuple):
    wPlus: float
    wMinus: float
    wCoherent: float
    total: float


def _field(t, p: SpinParams):
    t = np.asarray(t, dtype=float)
    s = t / p.tPrime
    return p.nu0 * (1 - s) + p.nuT * s, 0.5 * np.pi * s


def spin_hamiltonian(t: float, p: SpinParams) -> np.ndarray:
    if not 0 <= t <= p.tPrime:
        raise ValueError(f"t={t} outside [0, {p.tPrime}]")
    nu, theta = _field(t, p)
    return nu * (np.cos(theta) * SIGMA_X + np.sin(theta) * SIGMA_Y)


def _spin_batch(times, p: SpinParams) -> np.ndarray:
    nu, theta = _field(times, p)
    c = (nu * np.cos(theta))[:, None, None]
    s = (nu * np.sin(theta))[:, None, None]
    return c * SIGMA_X + s * SIGMA_Y


def spin_protocol(p: SpinParams) -> DrivingProtocol:
    return DrivingProtocol(
        hamiltonian=lambda t: spin_hamiltonian(t, p),
        duration=p.tPrime,
        dim=2,
        batch=lambda ts: _spin_batch(ts, p),
    )


def initial_eigensystem(p: SpinParams) -> EigenSystem:
    """``(-nu0, +nu0)`` with eigenvectors ``(|->, |+>)``."""
    return EigenSystem(np.array([-p.nu0, p.nu0]), np.column_stack([KET_MINUS, KET_PLUS]))


def final_eigensystem(p: SpinParams) -> EigenSystem:
    """``(-nuT, +nuT)`` with eigenvectors ``(|-i>, |+i>)``."""
    return EigenSystem(np.array([-p.nuT, p.nuT]), np.column_stack([KET_MINUS_I, KET_PLUS_I]))


def initial_state(p: SpinParams, kind: str) -> np.ndarray:
    eig0 = initial_eigensystem(p)
    if kind == "thermal":
        return gibbs_state(eig0, p.beta)[0]
    if kind == "coherent-gibbs":
        return coherent_gibbs_state(eig0, p.beta)
    raise ValueError(f"unknown state kind {kind!r}; expected one of {STATE_KINDS}")


def spin_snapshot(
    p: SpinParams,
    kind: str = "coherent-gibbs",
    propagator: Optional[np.ndarray] = None,
    tol: float = SWEEP_TOL,
) -> ProcessSnapshot:
    if propagator is None:
        propagator = auto_propagate(spin_protocol(p), tol).U
    return make_snapshot(
        spin_hamiltonian(0.0, p),
        spin_hamiltonian(p.tPrime, p),
        propagator,
        initial_state(p, kind),
        p.sigma,
        eig0=initial_eigensystem(p),
        eig_t=final_eigensystem(p),
    )


def _check_basis(p: SpinParams, snap: ProcessSnapshot) -> None:
    for got, want, label in (
        (snap.eig0, initial_eigensystem(p), "initial"),
        (snap.eig_t, final_eigensystem(p), "final"),
    ):
        dev = max(
            float(np.max(np.abs(got.eigenvalues - want.eigenvalues))),
            float(np.max(np.abs(got.eigenvectors - want.eigenvectors))),
        )
        if dev > BASIS_TOL:
            raise BasisMismatchError(f"{label} eigenbasis differs from the canonical spin basis by {dev:.2e}")


def _amplitudes(p: SpinParams, snap: ProcessSnapshot):
    _check_basis(p, snap)
    u = snap.amplitudes
    # rows (-i, +i), columns (-, +)
    return {("+i", "+"): u[1, 1], ("+i", "-"): u[1, 0], ("-i", "+"): u[0, 1], ("-i", "-"): u[0, 0]}


def _coherent_prefactor(p: SpinParams, amps) -> float:
    z0 = 2 * np.cosh(p.beta * p.nu0)
    return float(
        2 * np.exp(-p.nu0**2 / p.sigma**2) * np.real(amps["+i", "+"] * np.conj(amps["+i", "-"])) / z0
    )


def analytic_components(p: SpinParams, snap: ProcessSnapshot) -> tuple[WorkDistribution, WorkDistribution, WorkDistribution]:
    """Work densities for the two initial levels and for the initial coherence.

    Valid for the coherent Gibbs start; each part is a small Gaussian mixture.
    """
    amps = _amplitudes(p, snap)
    z0 = 2 * np.cosh(p.beta * p.nu0)
    parts = []
    for sgn, key in ((+1, "+"), (-1, "-")):
        pop = np.exp(-sgn * p.beta * p.nu0) / z0
        w = np.array([pop * abs(amps["+i", key]) ** 2, pop * abs(amps["-i", key]) ** 2], dtype=complex)
        mu = np.array([p.nuT - sgn * p.nu0, -p.nuT - sgn * p.nu0])
        parts.append(WorkDistribution(w, mu, p.sigma))
    c = _coherent_prefactor(p, amps)
    parts.append(
        WorkDistribution(np.array([c, -c], dtype=complex), np.array([p.nuT, -p.nuT]), p.sigma, np.ones(2, bool))
    )
    return parts[0], parts[1], parts[2]


def average_works(p: SpinParams, snap: ProcessSnapshot) -> WorkBreakdown:
    amps = _amplitudes(p, snap)
    z0 = 2 * np.cosh(p.beta * p.nu0)
    w = {}
    for sgn, key in ((+1, "+"), (-1, "-")):
        pop = np.exp(-sgn * p.beta * p.nu0) / z0
        w[key] = float(
            pop * (abs(amps["+i", key]) ** 2 * (p.nuT - sgn * p.nu0) - abs(amps["-i", key]) ** 2 * (p.nuT + sgn * p.nu0))
        )
    # first moment of c [N(nuT) - N(-nuT)] is 2 c nuT
    wc = 2 * _coherent_prefactor(p, amps) * p.nuT
    return WorkBreakdown(w["+"], w["-"], wc, w["+"] + w["-"] + wc)


def spin_free_energy_change(p: SpinParams) -> float:
    return free_energy_change(spin_hamiltonian(0.0, p), spin_hamiltonian(p.tPrime, p), p.beta)


class SweepRow(NamedTuple):
    t_prime: float
    w_incoherent: float
    half_beta_var: float
    w_coherent: float
    fdt_residual: float
    jarzynski_residual: float
    error: str = ""


def sweep_point(p: SpinParams, kind: str = "coherent-gibbs", tol: float = SWEEP_TOL) -> SweepRow:
    u = auto_propagate(spin_protocol(p), tol).U
    snap = spin_snapshot(p, kind, propagator=u)
    thermal = spin_snapshot(p, "thermal", propagator=u)
    br = average_works(p, snap) if kind == "coherent-gibbs" else None
    m = analytic_moments(snap)
    df = spin_free_energy_change(p)
    if br is None:
        w_inc, w_coh = m.mean, 0.0
    else:
        w_inc, w_coh = br.wPlus + br.wMinus, br.wCoherent
    return SweepRow(
        t_prime=p.tPrime,
        w_incoherent=w_inc,
        half_beta_var=0.5 * p.beta * m.energy_change_variance,
        w_coherent=w_coh,
        fdt_residual=fdt_residual(snap, p.beta, df),
        jarzynski_residual=jarzynski_residual(thermal, p.beta),
    )


def sweep_duration(
    p: SpinParams,
    t_primes: Sequence[float],
    kind: str = "coherent-gibbs",
    tol: float = SWEEP_TOL,
) -> list[SweepRow]:
    t_primes = [float(t) for t in t_primes]
    if any(t <= 0 for t in t_primes) or t_primes != sorted(t_primes):
        raise ValueError("t' values must be positive and sorted ascending")
    rows = []
    for tp in t_primes:
        try:
            rows.append(sweep_point(p.replace(tPrime=tp), kind, tol))
        except ConvergenceError as exc:
            log.warning("t'=%g: %s", tp, exc)
            nan = float("nan")
            rows.append(SweepRow(tp, nan, nan, nan, nan, nan, error=str(exc)))
    return rows


def log_grid(lo: float = 0.01, hi: float = 100.0, points: int = 61) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), points)


class ProfileRow(NamedTuple):
    W: float
    total: float
    incoherent: float
    coherent: float


def fig2_profile(p: SpinParams, w_grid, kind: str = "coherent-gibbs", snap: Optional[ProcessSnapshot] = None) -> list[ProfileRow]:
    w_grid = np.asarray(w_grid, dtype=float)
    if not np.all(np.isfinite(w_grid)) or np.any(np.diff(w_grid) <= 0):
        raise ValueError("W grid must be finite and strictly ascending")
    snap = snap if snap is not None else spin_snapshot(p, kind)
    dist = build_work_distribution(snap)
    inc = density(dist.incoherent_part, w_grid)
    coh = density(dist.coherent_part, w_grid) if len(dist.coherent_part) else np.zeros_like(w_grid)
    return [ProfileRow(float(w), float(i + c), float(i), float(c)) for w, i, c in zip(w_grid, inc, coh)]

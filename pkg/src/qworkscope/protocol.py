"""Driving protocols and time-ordered propagation.

The propagator is a midpoint product of exact exponentials,

    U = exp(-i H(t_n) dt) ... exp(-i H(t_1) dt),   t_k = (k - 1/2) dt,

with its error estimated by comparing against the same product at twice
the number of steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import (
    EigenSystem,
    check_hermitian,
    frobenius_distance,
    ordered_product,
    unitaries_from_hamiltonians,
)

START_STEPS = 64
MAX_STEPS = 2**20


class ProtocolError(RuntimeError):
    """The protocol could not be evaluated at some time."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last_error: float, steps: int):
        super().__init__(message)
        self.last_error = last_error
        self.steps = steps


@dataclass(frozen=True)
class DrivingProtocol:
    """A Hamiltonian ``H(t)`` on ``[0, duration]``.

    ``batch`` is an optional vectorized form mapping an array of times to a
    ``(k, dim, dim)`` stack; it is used for long propagations when given.
    """

    hamiltonian: Callable[[float], np.ndarray]
    duration: float
    dim: int
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    def at(self, t: float) -> np.ndarray:
        try:
            h = np.asarray(self.hamiltonian(t), dtype=complex)
        except Exception as exc:  # protocol is user code
            raise ProtocolError(f"protocol evaluation failed at t={t!r}: {exc}") from exc
        if h.shape != (self.dim, self.dim):
            raise ProtocolError(f"H({t!r}) has shape {h.shape}, expected {(self.dim, self.dim)}")
        return check_hermitian(h, f"H({t!r})")

    def stack(self, times: np.ndarray) -> np.ndarray:
        if self.batch is None:
            return np.stack([self.at(float(t)) for t in times])
        try:
            hs = np.asarray(self.batch(times), dtype=complex)
        except Exception as exc:
            raise ProtocolError(f"protocol evaluation failed: {exc}") from exc
        if hs.shape != (len(times), self.dim, self.dim):
            raise ProtocolError(f"batched H has shape {hs.shape}")
        return hs

    @property
    def initial(self) -> np.ndarray:
        return self.at(0.0)

    @property
    def final(self) -> np.ndarray:
        return self.at(self.duration)

    @classmethod
    def constant(cls, h, duration: float) -> "DrivingProtocol":
        h = check_hermitian(h)
        return cls(
            hamiltonian=lambda t: h,
            duration=duration,
            dim=h.shape[0],
            batch=lambda ts: np.broadcast_to(h, (len(ts),) + h.shape),
        )


@dataclass(frozen=True)
class PropagationResult:
    U: np.ndarray
    steps: int
    estimated_error: float


# above this many steps the product is evaluated in chunks to bound memory
_CHUNK = 2**17


def _midpoint_product(protocol: DrivingProtocol, steps: int) -> np.ndarray:
    dt = protocol.duration / steps
    u = np.eye(protocol.dim, dtype=complex)
    for start in range(0, steps, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, steps))
        hs = protocol.stack((k + 0.5) * dt)
        u = ordered_product(unitaries_from_hamiltonians(hs, dt)) @ u
    return u


def propagate(protocol: DrivingProtocol, steps: int) -> PropagationResult:
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    steps = int(steps)
    u = _midpoint_product(protocol, steps)
    u_fine = _midpoint_product(protocol, 2 * steps)
    return PropagationResult(U=u, steps=steps, estimated_error=frobenius_distance(u, u_fine))


def auto_propagate(protocol: DrivingProtocol, tol: float, max_steps: int = MAX_STEPS) -> PropagationResult:
    """Double the step count from 64 until the step-doubling error is below ``tol``.

    The returned propagator is the finer of the final compared pair.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    steps = START_STEPS
    coarse = _midpoint_product(protocol, steps)
    while True:
        fine = _midpoint_product(protocol, 2 * steps)
        err = frobenius_distance(coarse, fine)
        if err <= tol:
            return PropagationResult(U=fine, steps=2 * steps, estimated_error=err)
        if 2 * steps >= max_steps:
            raise ConvergenceError(
                f"propagation did not reach tol={tol:.1e} within {max_steps} steps "
                f"(last error estimate {err:.3e})",
                last_error=err,
                steps=2 * steps,
            )
        steps *= 2
        coarse = fine


def transition_amplitudes(U, eig0: EigenSystem, eig_t: EigenSystem) -> np.ndarray:
    """Amplitudes ``U_lm = <E^l_t'| U |E^m_0>``."""
    U = np.asarray(U, dtype=complex)
    if not (U.shape == (eig0.dim, eig0.dim) and eig0.dim == eig_t.dim):
        raise ValueError(
            f"dimension mismatch: U {U.shape}, initial basis {eig0.dim}, final basis {eig_t.dim}"
        )
    return eig_t.eigenvectors.conj().T @ U @ eig0.eigenvectors

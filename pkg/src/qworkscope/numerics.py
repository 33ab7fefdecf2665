"""Dense Hermitian linear algebra shared by the rest of the package.

Everything here works on plain ``numpy`` complex arrays. Exponentials of
Hermitian generators are taken through the eigendecomposition so that the
resulting propagators are unitary by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""

    def __init__(self, asymmetry: float):
        self.asymmetry = float(asymmetry)
        super().__init__(
            f"matrix is not Hermitian: max |H - H^dagger| = {self.asymmetry:.3e} "
            f"(tolerance {HERMITIAN_TOL:.0e})"
        )


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def to_basis(self, op: np.ndarray) -> np.ndarray:
        """Matrix elements ``<E_m|op|E_n>`` of an operator given in the computational basis."""
        v = self.eigenvectors
        return v.conj().T @ op @ v

    def from_basis(self, op: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_basis`."""
        v = self.eigenvectors
        return v @ op @ v.conj().T


def as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def hermitian_asymmetry(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def check_hermitian(h, name: str = "matrix") -> np.ndarray:
    h = as_square(h, name)
    asym = hermitian_asymmetry(h)
    if asym > HERMITIAN_TOL:
        raise NotHermitianError(asym)
    return h


def hermitian_eigendecompose(h) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized after the tolerance check so that tiny
    asymmetries do not leak into the (LAPACK ``heevd``) solver.
    """
    h = check_hermitian(h)
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return EigenSystem(eigenvalues=w, eigenvectors=v)


def hermitian_function(h, func) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    ``func`` maps the real eigenvalue array to (possibly complex) values.
    """
    eig = h if isinstance(h, EigenSystem) else hermitian_eigendecompose(h)
    v = eig.eigenvectors
    return (v * func(eig.eigenvalues)) @ v.conj().T


def unitary_from_hamiltonian(h, t: float) -> np.ndarray:
    """Return ``exp(-i H t)`` for Hermitian ``H`` and a finite real ``t``."""
    if not np.isfinite(t):
        raise ValueError(f"duration must be finite, got {t}")
    return hermitian_function(h, lambda w: np.exp(-1j * w * t))


def unitaries_from_hamiltonians(hs: np.ndarray, dt: float) -> np.ndarray:
    """Batched ``exp(-i H_k dt)`` for a stack of Hermitian matrices, shape ``(k, d, d)``."""
    hs = np.asarray(hs, dtype=complex)
    asym = float(np.max(np.abs(hs - hs.conj().transpose(0, 2, 1)))) if hs.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NotHermitianError(asym)
    w, v = np.linalg.eigh(hs)
    return (v * np.exp(-1j * w * dt)[:, None, :]) @ v.conj().transpose(0, 2, 1)


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product ``M_{k-1} ... M_1 M_0`` of a stack, later entries leftmost.

    Uses pairwise reduction so the work vectorizes over the stack.
    """
    mats = np.asarray(mats)
    if mats.shape[0] == 0:
        raise ValueError("empty product")
    eye = np.eye(mats.shape[1], dtype=mats.dtype)[None]
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, eye])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=complex)
    return frobenius_distance(u.conj().T @ u, np.eye(u.shape[0]))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))

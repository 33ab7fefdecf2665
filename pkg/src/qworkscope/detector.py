"""Brute-force simulation of the squeezed-detector measurement.

The detector is a harmonic oscillator truncated at ``N`` quanta. The
measurement runs in four steps on the joint ``detector (x) system`` space:

1. prepare ``S(r)|0><0|S(r)^dag (x) rho_s``;
2. couple through the displacement ``D(-H(0))``;
3. evolve the system alone with its propagator;
4. couple again through ``D(+H(t'))``;

and the detector is then read out through its Husimi function in the
squeezed frame, whose marginal along the real axis is the work density.
Couplings are taken in the short-interaction limit with ``g tau / 2 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .numerics import check_hermitian, unitary_from_hamiltonian
from .protocol import DrivingProtocol, auto_propagate
from .work import ProcessSnapshot, squeezing_from_sigma

TOP_POPULATION_TOL = 1e-8
SQUEEZE_TOP_TOL = 1e-10
Q_BOUNDARY_TOL = 1e-8


class CutoffError(RuntimeError):
    """The Fock-space truncation is too small for the states involved."""

    def __init__(self, stage: str, population: float, cutoff: int):
        super().__init__(
            f"cutoff N={cutoff} too small at stage '{stage}': "
            f"top-level population {population:.3e}"
        )
        self.stage = stage
        self.population = population
        self.cutoff = cutoff


class GridCoverageError(ValueError):
    pass


@dataclass(frozen=True)
class FockSpace:
    cutoff: int
    a: np.ndarray
    adag: np.ndarray
    q: np.ndarray
    p: np.ndarray

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def number(self) -> np.ndarray:
        return self.adag @ self.a

    def basis(self, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[n] = 1.0
        return v


def build_fock(cutoff: int) -> FockSpace:
    if cutoff < 2:
        raise ValueError(f"cutoff must be >= 2, got {cutoff}")
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)
    adag = a.conj().T
    return FockSpace(cutoff=cutoff, a=a, adag=adag, q=(a + adag) / 2, p=(a - adag) / 2j)


def coherent_vectors(alphas, dim: int) -> np.ndarray:
    """Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``; one row per ``alpha``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    out = np.empty((alphas.size, dim), dtype=complex)
    out[:, 0] = np.exp(-np.abs(alphas) ** 2 / 2)
    for n in range(1, dim):
        out[:, n] = out[:, n - 1] * alphas / np.sqrt(n)
    return out


def squeeze_operator(fock: FockSpace, r: float) -> np.ndarray:
    """``exp{(r/2)(a^2 - a^dag^2)}`` in the truncated space."""
    gen = 0.5 * r * (fock.a @ fock.a - fock.adag @ fock.adag)
    # exp(G) = exp(-i (iG)), iG Hermitian for anti-Hermitian G
    return unitary_from_hamiltonian(1j * gen, 1.0)


def top_population(rho_or_vec, levels: int = 2) -> float:
    x = np.asarray(rho_or_vec)
    if x.ndim == 1:
        return float(np.sum(np.abs(x[-levels:]) ** 2))
    return float(np.sum(np.real(np.diag(x)[-levels:])))


def squeezed_vacuum(fock: FockSpace, r: float) -> np.ndarray:
    psi = squeeze_operator(fock, r)[:, 0]
    pop = top_population(psi)
    if pop > SQUEEZE_TOP_TOL:
        raise CutoffError("squeezed vacuum", pop, fock.cutoff)
    return psi / np.linalg.norm(psi)


def coupling_unitary(fock: FockSpace, hs, sign: int) -> np.ndarray:
    """Operator-valued displacement ``exp{sign (a^dag - a) (x) H_s}`` on detector (x) system."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    hs = check_hermitian(hs, "system Hamiltonian")
    gen = sign * np.kron(fock.adag - fock.a, hs)
    return unitary_from_hamiltonian(1j * gen, 1.0)


def partial_trace_system(rho_joint: np.ndarray, det_dim: int, sys_dim: int) -> np.ndarray:
    return np.einsum("iaja->ij", rho_joint.reshape(det_dim, sys_dim, det_dim, sys_dim))


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    n_re: int
    im_min: float
    im_max: float
    n_im: int

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.n_re)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.n_im)

    def shifted_im(self, offset: float) -> "GridSpec":
        return GridSpec(self.re_min, self.re_max, self.n_re, self.im_min + offset, self.im_max + offset, self.n_im)


@dataclass(frozen=True)
class DetectorConfig:
    r: float
    cutoff: int
    grid: GridSpec
    tol: float = 1e-9

    @property
    def sigma(self) -> float:
        return float(np.exp(-self.r) / np.sqrt(2.0))

    @property
    def scale(self) -> float:
        return float(np.exp(self.r))


# Q in the squeezed frame is a unit-width coherent-state Gaussian: std 1/sqrt(2) per axis
Q_AXIS_STD = 1.0 / np.sqrt(2.0)


def make_grid(r: float, w_min: float, w_max: float, points_per_width: int = 20, im_widths: float = 7.0) -> GridSpec:
    """Beta-plane grid covering works in ``[w_min, w_max]`` with 6-sigma margins."""
    sigma = np.exp(-r) / np.sqrt(2.0)
    scale = np.exp(r)
    re_lo = scale * (w_min - 6 * sigma)
    re_hi = scale * (w_max + 6 * sigma)
    spacing = sigma * scale / points_per_width
    n_re = int(math.ceil((re_hi - re_lo) / spacing)) + 1
    im_half = im_widths * Q_AXIS_STD
    n_im = int(math.ceil(2 * im_half / (Q_AXIS_STD / points_per_width))) + 1
    return GridSpec(re_lo, re_hi, n_re, -im_half, im_half, n_im)


def cutoff_rule(r: float, e_max: float) -> int:
    return int(math.ceil((np.exp(r) * e_max + 6) ** 2))


def detector_config(snap: ProcessSnapshot, cutoff: Optional[int] = None, tol: float = 1e-9) -> DetectorConfig:
    r = squeezing_from_sigma(snap.sigma)
    w_lo, w_hi = snap.work_range()
    e_max = max(abs(w_lo), abs(w_hi))
    n = cutoff if cutoff is not None else cutoff_rule(r, e_max)
    return DetectorConfig(r=r, cutoff=n, grid=make_grid(r, w_lo, w_hi), tol=tol)


def run_measurement_scheme(
    rho_s0,
    protocol: DrivingProtocol,
    cfg: DetectorConfig,
    propagator: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Detector density matrix after the second coupling (system traced out)."""
    rho_s0 = np.asarray(rho_s0, dtype=complex)
    d = protocol.dim
    fock = build_fock(cfg.cutoff)
    nd = fock.dim

    def guard(rho_joint, stage):
        pop = top_population(partial_trace_system(rho_joint, nd, d))
        if pop > TOP_POPULATION_TOL:
            raise CutoffError(stage, pop, cfg.cutoff)

    sv = squeezed_vacuum(fock, cfg.r)
    rho = np.kron(np.outer(sv, sv.conj()), rho_s0)

    u1 = coupling_unitary(fock, protocol.initial, -1)
    rho = u1 @ rho @ u1.conj().T
    guard(rho, "first coupling")

    if propagator is None:
        propagator = auto_propagate(protocol, cfg.tol).U
    us = np.kron(np.eye(nd), propagator)
    rho = us @ rho @ us.conj().T

    u2 = coupling_unitary(fock, protocol.final, +1)
    rho = u2 @ rho @ u2.conj().T
    guard(rho, "second coupling")

    return partial_trace_system(rho, nd, d)


def analytic_detector_state(snap: ProcessSnapshot, cfg: DetectorConfig) -> np.ndarray:
    """Mixture of squeezed coherent dyads ``sum rho_mn U_lm U*_ln |b_lm><b_ln|``."""
    fock = build_fock(cfg.cutoff)
    s = squeeze_operator(fock, cfg.r)
    e0 = snap.eig0.eigenvalues
    et = snap.eig_t.eigenvalues
    d = snap.dim
    betas = cfg.scale * (et[:, None] - e0[None, :])
    vecs = coherent_vectors(betas.ravel(), fock.dim) @ s.T  # rows: S|beta_lm>
    vecs = vecs.reshape(d, d, fock.dim)
    rho = snap.eig0.to_basis(snap.rho0)
    u = snap.amplitudes
    out = np.zeros((fock.dim, fock.dim), dtype=complex)
    for l in range(d):
        # sum_{mn} rho_mn U_lm U*_ln |v_lm><v_ln|
        rows = u[l][:, None] * vecs[l]
        out += rows.T @ rho @ rows.conj()
    return out


def fidelity(rho, sigma, cut: float = 1e-14) -> float:
    """Uhlmann fidelity via low-rank square-root factors."""

    def factor(x):
        w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
        keep = w > cut * max(w.max(), 1e-300)
        return v[:, keep] * np.sqrt(w[keep])

    a = factor(np.asarray(rho))
    b = factor(np.asarray(sigma))
    return float(np.sum(np.linalg.svd(a.conj().T @ b, compute_uv=False)) ** 2)


def husimi_q(rho_a, cfg: DetectorConfig) -> np.ndarray:
    """``Q(beta) = <beta, r| rho |beta, r> / pi`` on the grid, shape ``(n_re, n_im)``."""
    rho_a = np.asarray(rho_a, dtype=complex)
    fock = build_fock(rho_a.shape[0] - 1)
    s = squeeze_operator(fock, cfg.r)
    rho_b = s.conj().T @ rho_a @ s
    re = cfg.grid.re
    im = cfg.grid.im
    q = np.empty((re.size, im.size))
    for i, x in enumerate(re):
        c = coherent_vectors(x + 1j * im, fock.dim)
        q[i] = np.real(np.einsum("pi,ij,pj->p", c.conj(), rho_b, c, optimize=True)) / np.pi
    return q


def riemann_sum(q: np.ndarray, cfg: DetectorConfig) -> float:
    dre = (cfg.grid.re_max - cfg.grid.re_min) / (cfg.grid.n_re - 1)
    dim_ = (cfg.grid.im_max - cfg.grid.im_min) / (cfg.grid.n_im - 1)
    return float(np.sum(q) * dre * dim_)


def marginal_work_distribution(q: np.ndarray, cfg: DetectorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``Q`` over the imaginary axis and map ``W = Re(beta) e^{-r}``."""
    edge = max(float(np.max(np.abs(q[:, 0]))), float(np.max(np.abs(q[:, -1]))))
    if edge > Q_BOUNDARY_TOL:
        raise GridCoverageError(f"imaginary grid too narrow: boundary Q value {edge:.3e}")
    marginal = trapezoid(q, cfg.grid.im, axis=1)
    return cfg.grid.re / cfg.scale, cfg.scale * marginal


@dataclass(frozen=True)
class OracleResult:
    w: np.ndarray
    density: np.ndarray
    detector_state: np.ndarray
    config: DetectorConfig


def oracle_work_distribution(
    snap: ProcessSnapshot,
    protocol: DrivingProtocol,
    cutoff: Optional[int] = None,
    max_doublings: int = 4,
) -> OracleResult:
    """Full simulation with the cutoff picked by the rule and doubled on breaches."""
    cfg = detector_config(snap, cutoff)
    for attempt in range(max_doublings + 1):
        try:
            rho_a = run_measurement_scheme(snap.rho0, protocol, cfg, propagator=snap.propagator)
            break
        except CutoffError:
            if attempt == max_doublings:
                raise
            cfg = DetectorConfig(cfg.r, 2 * cfg.cutoff, cfg.grid, cfg.tol)
    q = husimi_q(rho_a, cfg)
    w, dens = marginal_work_distribution(q, cfg)
    return OracleResult(w=w, density=dens, detector_state=rho_a, config=cfg)


def l1_distance(w: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    return float(trapezoid(np.abs(f - g), w))


def position_moments(fock: FockSpace, psi: np.ndarray) -> tuple[float, float]:
    mean = float(np.real(psi.conj() @ fock.q @ psi))
    second = float(np.real(psi.conj() @ fock.q @ fock.q @ psi))
    return mean, float(np.sqrt(max(second - mean**2, 0.0)))


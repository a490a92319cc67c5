"""Brute-force reference: the amplitude equations on a uniform Delta_k grid.

The photon continuum is replaced by n_k modes spaced dk on [-W, W], with the
cavity-mode hopping xi_d = sqrt(gamma_c dk / 2 pi).  Discrete amplitudes are
a_m = A_m, b_{m,i} = B_{m,k_i} sqrt(dk) and c_{m,i,j} = C_{m,p_i,q_j} dk.  The
two-photon state is (1/2) sum_{ij} c_ij a_i^dag a_j^dag |0>, so its norm is
sum_{i>j}|c_ij|^2 + sum_i |c_ii / sqrt 2|^2: a diagonal entry is the amplitude of
two photons in one discrete mode.  Dropping it would lose a fraction of order
dk / (2 pi eps) of a narrow packet.

The integration runs in the interaction picture (free phases removed), which
keeps the right-hand side small and leaves only the coupling-driven motion
for the adaptive Runge-Kutta step control.  The two-photon sector is held as
a full symmetric matrix while integrating; ``state`` returns the packed
ordered pairs i > j followed by the doubly occupied modes c_ii / sqrt 2.

The discrete spectrum makes every signal periodic with period 2 pi / dk, so
dk must satisfy 2 pi / dk > t_end and the packet's own ringing
exp(-eps 2 pi / dk) must be small.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import (ConvergenceError, InvalidParameterError, OptoscatterError, PhotonPacket,
                   SystemParams, initial_amplitude_c)
from .franck_condon import fc_table


# Desk profile: dk = 0.015 keeps the revival time 2 pi / dk near 420, and the
# window still holds every sideband of a three-phonon truncation.
DESK_RTOL = 1e-6
DESK_ATOL = 1e-8
DESK_FACTORS = (0.5, 0.75, 1.0)


class CoverageError(OptoscatterError):
    """The continuum window does not contain the photon packet."""


class StiffnessError(ConvergenceError):
    """The adaptive integrator could not complete the requested run."""


@dataclass(frozen=True)
class OracleGrid:
    """Discretization of the continuum and the phonon space."""

    params: SystemParams
    n_ph: int = 3
    n_k: int = 801
    w: float = 6.0

    def __post_init__(self):
        if self.n_k < 3:
            raise InvalidParameterError("n_k", "need at least 3 modes")
        if not self.w > 0:
            raise InvalidParameterError("w", "must be > 0")
        if self.n_ph < 0:
            raise InvalidParameterError("n_ph", "must be >= 0")

    @property
    def dk(self) -> float:
        return 2 * self.w / (self.n_k - 1)

    @property
    def xi_d(self) -> float:
        return math.sqrt(self.params.gamma_c * self.dk / (2 * math.pi))

    @property
    def k(self) -> np.ndarray:
        return np.linspace(-self.w, self.w, self.n_k)

    @property
    def revival_time(self) -> float:
        """Period of the discrete-mode dynamics, 2 pi / dk."""
        return 2 * math.pi / self.dk

    def scaled(self, n_k_factor: float = 1, w_factor: float = 1) -> "OracleGrid":
        n_k = int(round((self.n_k - 1) * n_k_factor)) + 1
        return OracleGrid(self.params, self.n_ph, n_k, self.w * w_factor)


@dataclass(eq=False)
class DiscretizedSystem:
    grid: OracleGrid
    packet: PhotonPacket
    n0: int
    a: np.ndarray          # (M,)
    b: np.ndarray          # (M, K)
    c: np.ndarray          # (M, K, K) symmetric
    norm_deficit: float
    t: float = 0.0
    window_deficit: float = 0.0

    @property
    def n_k(self):
        return self.grid.n_k

    @property
    def w(self):
        return self.grid.w

    @property
    def dk(self):
        return self.grid.dk

    @property
    def xi_d(self):
        return self.grid.xi_d

    @property
    def n_ph(self):
        return self.grid.n_ph

    @property
    def state(self) -> np.ndarray:
        """Flat amplitudes: a, b (row-major in m), c_{m,i,j} for i > j, then c_{m,i,i} / sqrt 2."""
        il = np.tril_indices(self.grid.n_k, -1)
        d = np.arange(self.grid.n_k)
        return np.concatenate([self.a, self.b.ravel(), self.c[:, il[0], il[1]].ravel(),
                               self.c[:, d, d].ravel() / math.sqrt(2.0)])

    def norm(self) -> float:
        return float(np.sum(np.abs(self.a) ** 2) + np.sum(np.abs(self.b) ** 2)
                     + 0.5 * np.sum(np.abs(self.c) ** 2))


def build_initial(packet: PhotonPacket, n0: int, grid: OracleGrid) -> DiscretizedSystem:
    """Sample the symmetrized Lorentzian packet on the grid and renormalize."""
    for j, d in enumerate(packet.deltas):
        if abs(d) + 10 * packet.epsilon >= grid.w:
            raise CoverageError(f"window W={grid.w} does not cover delta{j + 1}={d} "
                                f"with 10 eps margin (eps={packet.epsilon})")
    if not 0 <= n0 <= grid.n_ph:
        raise InvalidParameterError("n0", f"must lie in [0, n_ph={grid.n_ph}]")
    M, K = grid.n_ph + 1, grid.n_k
    k = grid.k
    c = np.zeros((M, K, K), dtype=complex)
    c[n0] = initial_amplitude_c(n0, k[:, None], k[None, :], packet, n0) * grid.dk
    norm = 0.5 * float(np.sum(np.abs(c) ** 2))
    c /= math.sqrt(norm)
    return DiscretizedSystem(grid, packet, n0, np.zeros(M, dtype=complex),
                             np.zeros((M, K), dtype=complex), c, 1.0 - norm,
                             window_deficit=window_loss(packet, grid.w))


def window_loss(packet: PhotonPacket, w: float) -> float:
    """Share of the product-Lorentzian packet weight outside [-W, W]^2 (about 2 eps / pi W each)."""
    eps = packet.epsilon
    inside = 1.0
    for d in packet.deltas:
        inside *= (math.atan((w - d) / eps) + math.atan((w + d) / eps)) / math.pi
    return 1.0 - inside


class _Rhs:
    """Interaction-picture right-hand side; free phases are re-applied per call."""

    def __init__(self, grid: OracleGrid):
        par = grid.params
        M = grid.n_ph + 1
        self.M, self.K = M, grid.n_k
        self.k = grid.k
        self.xi = grid.xi_d
        plus = fc_table(par.beta0, M).values
        minus = fc_table(-par.beta0, M).values
        self.g01, self.g12, self.g10, self.g21 = plus, plus, minus, minus
        lab = np.arange(M)
        self.dm = (lab[:, None] - lab[None, :]) * par.omega_m
        self.nu = par.nu

    def split(self, y):
        M, K = self.M, self.K
        a = y[:M]
        b = y[M:M + M * K].reshape(M, K)
        c = y[M + M * K:].reshape(M, K, K)
        return a, b, c

    def __call__(self, t, y):
        a, b, c = self.split(y)
        out = self._out if hasattr(self, "_out") else np.empty_like(y)
        self._out = out
        da, db, dc = self.split(out)
        xi, nu, dm = self.xi, self.nu, self.dm
        ph = np.exp(1j * self.k * t)                     # e^{i dk t}
        s2 = math.sqrt(2.0)
        # A <- B
        sb = b @ np.conj(ph)
        da[:] = -1j * s2 * xi * ((self.g21 * np.exp(1j * (dm - 3 * nu) * t)) @ sb)
        # B <- A and B <- C
        db[:] = -1j * s2 * xi * np.outer((self.g12 * np.exp(1j * (dm + 3 * nu) * t)) @ a, ph)
        yc = c @ np.conj(ph)                             # (M, K): sum_j c_{n,i,j} e^{-i dk_j t}
        db += -1j * xi * ((self.g10 * np.exp(1j * (dm - nu) * t)) @ yc)
        # C <- B: c'_{m,i,j} = -i xi (x_{m,i} e^{i dk_j t} + x_{m,j} e^{i dk_i t})
        x = (-1j * xi) * ((self.g01 * np.exp(1j * (dm + nu) * t)) @ b)
        np.multiply(x[:, :, None], ph[None, None, :], out=dc)
        dc += ph[None, :, None] * x[:, None, :]
        return out


@dataclass
class Trajectory:
    times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    norm: np.ndarray
    n_rhs: int = 0

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])))


def integrate(sys: DiscretizedSystem, t_end: float, times=None, rtol: float = 1e-8,
              atol: float = 1e-11) -> Trajectory:
    """Integrate from sys.t to t_end with RK45; P1, P2 and the norm at ``times``."""
    if t_end < sys.t:
        raise InvalidParameterError("t_end", "must not precede the current time")
    if times is None:
        times = np.linspace(sys.t, t_end, 101)
    times = np.asarray(times, dtype=float)
    if t_end >= sys.grid.revival_time:
        warnings.warn(f"t_end={t_end} reaches the discrete revival time "
                      f"{sys.grid.revival_time:.4g}; refine dk", RuntimeWarning, stacklevel=2)
    rhs = _Rhs(sys.grid)
    y0 = np.concatenate([sys.a, sys.b.ravel(), sys.c.ravel()])
    sol = solve_ivp(rhs, (sys.t, t_end), y0, method="RK45", t_eval=times,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StiffnessError(f"integration failed at t={sol.t[-1] if sol.t.size else sys.t}: "
                             f"{sol.message}; try a coarser n_k or a smaller gamma_c")
    M, K = rhs.M, rhs.K
    ys = sol.y
    p2 = np.sum(np.abs(ys[:M]) ** 2, axis=0)
    p1 = np.sum(np.abs(ys[M:M + M * K]) ** 2, axis=0)
    pc = 0.5 * np.sum(np.abs(ys[M + M * K:]) ** 2, axis=0)
    a, b, c = rhs.split(ys[:, -1].copy())
    # store the final state back in the Schroedinger picture
    par = sys.grid.params
    lab = np.arange(M)
    k = sys.grid.k
    tf = float(sol.t[-1])
    sys.a = a * np.exp(-1j * (lab - 4 * par.nu) * tf)
    sys.b = b * np.exp(-1j * (k[None, :] - par.nu + lab[:, None]) * tf)
    sys.c = c * np.exp(-1j * (k[None, :, None] + k[None, None, :] + lab[:, None, None]) * tf)
    sys.t = tf
    return Trajectory(sol.t, p1, p2, p1 + p2 + pc, int(sol.nfev))


@dataclass
class SweepReport:
    labels: list
    max_diff_p1: list
    max_diff_p2: list
    monotone: bool
    trajectories: list = field(repr=False, default_factory=list)

    def as_text(self) -> str:
        lines = []
        for lab, d1, d2 in zip(self.labels, self.max_diff_p1, self.max_diff_p2):
            lines.append(f"pair={lab} max_dp1={d1:.6e} max_dp2={d2:.6e}")
        lines.append(f"monotone={'yes' if self.monotone else 'no'}")
        return "\n".join(lines)


def convergence_sweep(grid: OracleGrid, packet: PhotonPacket, n0: int, t_end: float,
                      factors=DESK_FACTORS, scale: str = "n_k", times=None, rtol: float = DESK_RTOL,
                      atol: float = DESK_ATOL) -> SweepReport:
    """Rerun the oracle with n_k (fixed W) or W (fixed dk) scaled by each factor.

    Reports the Cauchy differences of successive P1 and P2 traces and warns if
    they do not decrease.
    """
    if len(factors) < 2:
        raise InvalidParameterError("factors", "need at least two values")
    if scale not in ("n_k", "w"):
        raise InvalidParameterError("scale", "expected 'n_k' or 'w'")
    if times is None:
        times = np.linspace(0.0, t_end, 101)
    trajs, names = [], []
    for f in factors:
        g = grid.scaled(n_k_factor=f) if scale == "n_k" else grid.scaled(n_k_factor=f, w_factor=f)
        sys = build_initial(packet, n0, g)
        trajs.append(integrate(sys, t_end, times, rtol=rtol, atol=atol))
        names.append(f"n_k={g.n_k},w={g.w:g}")
    d1, d2, labels = [], [], []
    for i in range(1, len(trajs)):
        d1.append(float(np.max(np.abs(trajs[i].p1 - trajs[i - 1].p1))))
        d2.append(float(np.max(np.abs(trajs[i].p2 - trajs[i - 1].p2))))
        labels.append(f"{names[i - 1]} -> {names[i]}")
    mono = all(max(d1[i], d2[i]) <= max(d1[i - 1], d2[i - 1]) for i in range(1, len(d1)))
    if not mono:
        bad = [labels[i] for i in range(1, len(d1)) if max(d1[i], d2[i]) > max(d1[i - 1], d2[i - 1])]
        warnings.warn(f"oracle convergence is not monotone: {bad}", RuntimeWarning, stacklevel=2)
    return SweepReport(labels, d1, d2, mono, trajs)


def single_photon_filter_occupation(gamma_c: float, epsilon: float, delta: float, t):
    """Occupation of an empty linear cavity fed by one Lorentzian photon."""
    t = np.asarray(t, dtype=float)
    amp = np.exp(-(1j * delta + epsilon) * t) - np.exp(-gamma_c * t / 2)
    return 2 * gamma_c * epsilon * np.abs(amp) ** 2 / ((gamma_c / 2 - epsilon) ** 2 + delta**2)

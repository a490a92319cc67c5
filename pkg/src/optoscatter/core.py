"""Physical parameters, photon packets, mirror states and truncation policy.

All frequencies are in units of the mechanical frequency (omega_m = 1).
Photon continuum labels are detunings from the cavity frequency, extended
over the whole real line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class OptoscatterError(Exception):
    """Base class for all errors raised by the package."""


class InvalidParameterError(OptoscatterError, ValueError):
    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"{name}: {message}")


class TruncationError(OptoscatterError):
    def __init__(self, message: str, deficit: float):
        self.deficit = deficit
        super().__init__(f"{message} (deficit {deficit:.3e})")


class ConvergenceError(OptoscatterError):
    """A numerical procedure failed to reach its requested tolerance."""


OMEGA_M = 1.0


@dataclass(frozen=True)
class SystemParams:
    g0: float
    gamma_c: float
    omega_m: float = OMEGA_M

    def __post_init__(self):
        if self.omega_m != OMEGA_M:
            raise InvalidParameterError("omega_m", "frequencies are in units of omega_m, which must be 1")
        if not (math.isfinite(self.g0) and self.g0 >= 0):
            raise InvalidParameterError("g0", f"must be finite and >= 0, got {self.g0}")
        if not (math.isfinite(self.gamma_c) and self.gamma_c > 0):
            raise InvalidParameterError("gamma_c", f"must be finite and > 0, got {self.gamma_c}")

    @property
    def beta0(self) -> float:
        return self.g0 / self.omega_m

    @property
    def nu(self) -> float:
        return self.g0**2 / self.omega_m

    @property
    def xi(self) -> float:
        """Cavity-continuum hopping strength, sqrt(gamma_c / 2 pi)."""
        return math.sqrt(self.gamma_c / (2 * math.pi))


@dataclass(frozen=True)
class PhotonPacket:
    """Lorentzian two-photon packet: centre detunings and common half-width."""

    delta1: float
    delta2: float
    epsilon: float

    def __post_init__(self):
        for name in ("delta1", "delta2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(name, "must be finite")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameterError("epsilon", f"must be > 0, got {self.epsilon}")

    @property
    def deltas(self) -> tuple[float, float]:
        return (self.delta1, self.delta2)

    def swapped(self) -> "PhotonPacket":
        return PhotonPacket(self.delta2, self.delta1, self.epsilon)

    @classmethod
    def single_photon_resonant(cls, params: SystemParams, epsilon: float) -> "PhotonPacket":
        """Packet with delta1 = delta2 = -nu."""
        return cls(-params.nu, -params.nu, epsilon)


def packet_norm(packet: PhotonPacket) -> float:
    """Normalization constant of the symmetrized two-photon Lorentzian packet."""
    eps = packet.epsilon
    if not eps > 0:
        raise InvalidParameterError("epsilon", f"must be > 0, got {eps}")
    d = packet.delta1 - packet.delta2
    return eps / math.pi / math.sqrt(1.0 + 4 * eps**2 / (d**2 + 4 * eps**2))


def initial_amplitude_c(m, p_detuning, q_detuning, packet: PhotonPacket, n0: int):
    """Initial two-photon amplitude C_{m,p,q}(0) for a mirror in |n0>.

    Works elementwise on array detunings.
    """
    if m < 0 or n0 < 0:
        raise InvalidParameterError("m" if m < 0 else "n0", "phonon labels must be >= 0")
    p = np.asarray(p_detuning, dtype=float)
    q = np.asarray(q_detuning, dtype=float)
    if m != n0:
        return np.zeros(np.broadcast(p, q).shape, dtype=complex)[()]
    d1, d2, eps = packet.delta1, packet.delta2, packet.epsilon
    val = 1.0 / ((p - d1 + 1j * eps) * (q - d2 + 1j * eps)) + 1.0 / ((p - d2 + 1j * eps) * (q - d1 + 1j * eps))
    return packet_norm(packet) * val


# ---------------------------------------------------------------- mirror states


class MirrorInit:
    """Initial state of the mirror. Use Fock, Pure or Thermal."""

    kind: str = ""
    is_pure: bool = True

    def amplitudes(self, n_max: int, tol: float = 1e-8) -> np.ndarray:
        """Return c_{n0} (pure) or p_{n0} (mixed) for n0 = 0..len-1.

        The returned sequence is as short as possible; a TruncationError is
        raised if more than n_max + 1 entries would be needed.
        """
        raise NotImplementedError

    def n0_max(self, tol: float = 1e-8) -> int:
        return len(self.amplitudes(10**6, tol)) - 1

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Fock(MirrorInit):
    n0: int = 0
    kind = "fock"
    is_pure = True

    def __post_init__(self):
        if int(self.n0) != self.n0 or self.n0 < 0:
            raise InvalidParameterError("n0", f"must be a non-negative integer, got {self.n0}")

    def amplitudes(self, n_max, tol=1e-8):
        if self.n0 > n_max:
            raise TruncationError(f"Fock label {self.n0} exceeds n_max={n_max}", 1.0)
        c = np.zeros(self.n0 + 1, dtype=complex)
        c[self.n0] = 1.0
        return c

    def to_dict(self):
        return {"kind": "fock", "n0": int(self.n0)}


@dataclass(frozen=True)
class Pure(MirrorInit):
    coefficients: tuple = field(default=(1.0,))
    kind = "pure"
    is_pure = True

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise InvalidParameterError("coefficients", "must be a non-empty sequence")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise InvalidParameterError("coefficients", f"must be normalized, sum |c|^2 = {norm!r}")
        object.__setattr__(self, "coefficients", tuple(complex(x) for x in c))

    def amplitudes(self, n_max, tol=1e-8):
        c = np.asarray(self.coefficients, dtype=complex)
        nz = np.nonzero(np.abs(c) > 0)[0]
        last = int(nz[-1]) if nz.size else 0
        if last > n_max:
            raise TruncationError(f"superposition reaches n0={last} > n_max={n_max}",
                                  float(np.sum(np.abs(c[n_max + 1:]) ** 2)))
        return c[: last + 1]

    def to_dict(self):
        return {"kind": "pure",
                "coefficients": [[c.real, c.imag] for c in self.coefficients]}


@dataclass(frozen=True)
class Thermal(MirrorInit):
    nbar: float = 0.0
    kind = "thermal"
    is_pure = False

    def __post_init__(self):
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise InvalidParameterError("nbar", f"must be >= 0, got {self.nbar}")

    def weight(self, n):
        nbar = self.nbar
        return nbar**n / (1 + nbar) ** (n + 1)

    def amplitudes(self, n_max, tol=1e-8):
        if self.nbar == 0:
            return np.array([1.0])
        ratio = self.nbar / (1 + self.nbar)
        # tail beyond index n is ratio**(n+1)
        n_needed = max(0, math.ceil(math.log(tol) / math.log(ratio)) - 1)
        if n_needed > n_max:
            raise TruncationError(f"thermal state (nbar={self.nbar}) needs n0 up to {n_needed} "
                                  f"for tolerance {tol}, n_max={n_max}", ratio ** (n_max + 1))
        n = np.arange(n_needed + 1)
        return self.weight(n)

    def to_dict(self):
        return {"kind": "thermal", "nbar": float(self.nbar)}


def mirror_from_dict(d: dict) -> MirrorInit:
    d = dict(d)
    kind = d.pop("kind", None)
    allowed = {"fock": {"n0"}, "pure": {"coefficients"}, "thermal": {"nbar"}}
    if kind not in allowed:
        raise InvalidParameterError("mirror.kind", f"expected fock, pure or thermal, got {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise InvalidParameterError("mirror", f"unknown keys {sorted(extra)}")
    if kind == "fock":
        n0 = d.get("n0", 0)
        if isinstance(n0, bool) or not isinstance(n0, (int, np.integer)):
            raise InvalidParameterError("mirror.n0", f"must be an integer, got {n0!r}")
        return Fock(int(n0))
    if kind == "pure":
        if "coefficients" not in d:
            raise InvalidParameterError("mirror.coefficients", "required for a pure mirror state")
        coeffs = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in d["coefficients"]]
        return Pure(tuple(coeffs))
    if "nbar" not in d:
        raise InvalidParameterError("mirror.nbar", "required for a thermal mirror state")
    return Thermal(float(d["nbar"]))


# ---------------------------------------------------------------- truncation


@dataclass(frozen=True)
class Truncation:
    """Truncation policy.

    n_ph     highest phonon index kept in every sum
    tol      target truncation tolerance
    k_window half-width of the continuum window (None: default rule)
    quad_tol relative tolerance of detuning quadratures
    """

    n_ph: int = 6
    tol: float = 1e-8
    k_window: float | None = None
    quad_tol: float = 1e-6

    def __post_init__(self):
        if int(self.n_ph) != self.n_ph or self.n_ph < 0:
            raise InvalidParameterError("n_ph", f"must be a non-negative integer, got {self.n_ph}")
        if not self.tol > 0:
            raise InvalidParameterError("tol", "must be > 0")
        if not self.quad_tol > 0:
            raise InvalidParameterError("quad_tol", "must be > 0")
        if self.k_window is not None and not self.k_window > 0:
            raise InvalidParameterError("k_window", "must be > 0")

    @property
    def dim(self) -> int:
        return self.n_ph + 1

    def window(self, params: SystemParams, packet: PhotonPacket | None = None) -> float:
        if self.k_window is not None:
            return self.k_window
        eps = packet.epsilon if packet is not None else 0.0
        return 40 * max(params.gamma_c, eps) + 4 * params.omega_m * (self.n_ph + 1)

    def check_labels(self, n0_max: int):
        if self.n_ph < n0_max + 1:
            raise InvalidParameterError("n_ph", f"must be >= n0_max + 1 = {n0_max + 1}, got {self.n_ph}")

    def doubled(self) -> "Truncation":
        w = None if self.k_window is None else 2 * self.k_window
        return Truncation(2 * self.n_ph, self.tol, w, self.quad_tol)


def n_ph_for_tail(params: SystemParams, n0_max: int = 0, tol: float = 1e-8, cap: int = 200) -> int:
    """Smallest n_ph whose Franck-Condon tail at displacement 2*beta0 is below tol.

    The tail is taken for the worst initial label up to n0_max, and the
    result always satisfies n_ph >= n0_max + 1.
    """
    from .franck_condon import fc_overlap

    beta = 2 * params.beta0
    best = n0_max + 1
    for n0 in range(n0_max + 1):
        acc = 0.0
        n = 0
        while n <= cap:
            acc += fc_overlap(n0, n, beta) ** 2
            if n >= n0 and 1.0 - acc < tol:
                break
            n += 1
        best = max(best, n)
    return min(best, cap)


def as_array(x: Sequence[float] | float) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))

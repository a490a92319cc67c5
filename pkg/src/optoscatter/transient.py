"""Time-domain cavity amplitudes and photon-number statistics.

The Laplace transforms of the two-photon amplitude A_{n0,m}(t) and the
one-photon amplitude B_{n0,m,k}(t) are sums of rational terms with simple
(or, at special parameter coincidences, double) poles in the left half
plane.  They are inverted exactly by residues.  P1(t) needs B on a dense
Delta_k grid, so a vectorized evaluator regroups the partial fractions once
per (m, k) instead of inverting every term separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (MirrorInit, OptoscatterError, PhotonPacket,
                   SystemParams, Truncation, InvalidParameterError, packet_norm)
from .franck_condon import fc_table
from .quadrature import adaptive_gl


class ConfluenceError(OptoscatterError):
    """More than two poles of one rational term coincide."""


G2_FLOOR = 1e-300
G2_REPORT_FLOOR = 1e-10
CONFLUENCE_SPLIT = 1e-5


# ---------------------------------------------------------------- rational terms


@dataclass(frozen=True)
class RationalTerm:
    """prefactor / prod_j (s - poles[j])."""

    prefactor: complex
    poles: tuple

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.prefactor, dtype=complex)
        for p in self.poles:
            out = out / (s - p)
        return out


def cluster_poles(poles: Sequence[complex], tol: float) -> list[tuple[complex, int]]:
    """Merge poles closer than tol into (location, multiplicity) pairs."""
    out: list[list] = []
    for p in poles:
        for entry in out:
            if abs(entry[0] - p) < tol:
                entry[1] += 1
                break
        else:
            out.append([complex(p), 1])
    for loc, mult in out:
        if mult > 2:
            close = [complex(p) for p in poles if abs(p - loc) < tol]
            raise ConfluenceError(f"{mult} poles coincide near {loc:.6g}: {close}")
    return [(loc, mult) for loc, mult in out]


def _cluster_tol(gamma_c: float = 1.0) -> float:
    return 1e-9 * max(1.0, gamma_c)


def invert(terms: Sequence[RationalTerm], t, tol: float | None = None):
    """Inverse Laplace transform of a sum of rational terms by residues."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParameterError("t", "times must be >= 0")
    tol = _cluster_tol() if tol is None else tol
    out = np.zeros(t.shape, dtype=complex)
    for term in terms:
        groups = cluster_poles(term.poles, tol)
        if not groups:
            continue
        # factor out the slowest decay so that no exponential overflows
        shift = max(loc.real for loc, _ in groups)
        scale = np.exp(shift * t)
        acc = np.zeros(t.shape, dtype=complex)
        for d, (sd, md) in enumerate(groups):
            denom = term.prefactor
            corr = 0.0
            for j, (sj, mj) in enumerate(groups):
                if j != d:
                    denom = denom / (sd - sj) ** mj
                    corr += mj / (sd - sj)
            e = np.exp((sd - shift) * t)
            if md == 1:
                acc += denom * e
            else:
                acc += denom * e * (t - corr)
        out += scale * acc
    return out[()]


def _phi1(a, b, t):
    """(exp(a t) - exp(b t)) / (a - b), continuous at a = b."""
    a, b, t = np.broadcast_arrays(np.asarray(a, complex), np.asarray(b, complex), np.asarray(t, float))
    c = np.where(a.real >= b.real, a, b)
    o = np.where(a.real >= b.real, b, a)
    d = o - c
    small = np.abs(d) * np.maximum(t, 1.0) < 1e-300
    dd = np.where(small, 1.0, d)
    ratio = np.where(small, t + 0j, np.expm1(d * t) / dd)
    return np.exp(c * t) * ratio


# ---------------------------------------------------------------- pole bookkeeping


@dataclass(frozen=True, eq=False)
class TransientModel:
    """Pole positions and overlap products for one (params, packet, trunc, n0)."""

    params: SystemParams
    packet: PhotonPacket
    trunc: Truncation
    n0: int = 0
    order: str = "exact"
    g01: np.ndarray = field(init=False, repr=False)
    g10: np.ndarray = field(init=False, repr=False)
    g12: np.ndarray = field(init=False, repr=False)
    g21: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.n0 <= self.trunc.n_ph:
            raise InvalidParameterError("n0", f"must lie in [0, n_ph={self.trunc.n_ph}]")
        plus = fc_table(self.params.beta0, self.trunc.dim, self.order).values
        minus = fc_table(-self.params.beta0, self.trunc.dim, self.order).values
        for name, val in (("g01", plus), ("g12", plus), ("g10", minus), ("g21", minus)):
            object.__setattr__(self, name, val)

    @property
    def dim(self):
        return self.trunc.dim

    @property
    def norm(self):
        return packet_norm(self.packet)

    # pole positions -------------------------------------------------
    def s_sigma(self):
        pk = self.packet
        return -2 * pk.epsilon - 1j * (pk.delta1 + pk.delta2 + self.n0 * self.params.omega_m)

    def s_b(self, n):
        return -self.params.gamma_c - 1j * (np.asarray(n) * self.params.omega_m - 4 * self.params.nu)

    def s_e_cav(self, j, l):
        """Pole of the one-photon cavity factor, -eps - g/2 - i(delta_j - nu + l)."""
        pk, par = self.packet, self.params
        return -pk.epsilon - par.gamma_c / 2 - 1j * (pk.deltas[j] - par.nu + np.asarray(l) * par.omega_m)

    def s_d(self, m, dk):
        par = self.params
        return -par.gamma_c / 2 - 1j * (np.asarray(dk) - par.nu + np.asarray(m) * par.omega_m)

    def s_out(self, j, n, dk):
        """Pole of a free outgoing photon, -eps - i(dk + delta_j + n)."""
        pk = self.packet
        return -pk.epsilon - 1j * (np.asarray(dk) + pk.deltas[j] + np.asarray(n) * self.params.omega_m)

    def filt(self, j, dk):
        """1 / (dk - delta_j + i eps)."""
        pk = self.packet
        return 1.0 / (np.asarray(dk) - pk.deltas[j] + 1j * pk.epsilon)

    def has_internal_confluence(self) -> bool:
        """True if two poles sharing one k-independent term are not well separated.

        Within a term the poles are s_sigma, one s_b(n) and one s_e_cav(j, l),
        so only those three pairings are checked.
        """
        tol = 10 * _cluster_tol(self.params.gamma_c)
        lab = np.arange(self.dim)
        sig, sb = self.s_sigma(), self.s_b(lab)
        se = np.concatenate([self.s_e_cav(0, lab), self.s_e_cav(1, lab)])
        return bool(np.min(np.abs(sb - sig)) < tol or np.min(np.abs(se - sig)) < tol
                    or np.min(np.abs(sb[:, None] - se[None, :])) < tol)


# ---------------------------------------------------------------- Laplace terms


def laplace_a(m, n0, params, packet, trunc, order="exact") -> list[RationalTerm]:
    """Terms of the two-photon cavity amplitude A~_{n0,m}(s)."""
    mod = TransientModel(params, packet, trunc, n0, order)
    _check_label(m, trunc)
    pref = 2 * math.sqrt(2) * math.pi * params.gamma_c * mod.norm
    sig, sb = mod.s_sigma(), complex(mod.s_b(m))
    terms = []
    for l in range(mod.dim):
        f = mod.g21[m, l] * mod.g10[l, n0]
        for j in (0, 1):
            terms.append(RationalTerm(pref * f, (sig, sb, complex(mod.s_e_cav(j, l)))))
    return terms


def laplace_b(m, dk, n0, params, packet, trunc, order="exact") -> list[RationalTerm]:
    """Terms of the one-photon amplitude B~_{n0,m,k}(s) at detuning dk.

    Three groups: direct filtering of one photon, decay of the two-photon
    cavity state, and re-excitation after one photon has left (sequential).
    """
    mod = TransientModel(params, packet, trunc, n0, order)
    _check_label(m, trunc)
    g, nrm, xi = params.gamma_c, mod.norm, params.xi
    sd = complex(mod.s_d(m, dk))
    sig = mod.s_sigma()
    terms = []
    for j in (0, 1):
        pref = -2 * math.pi * xi * nrm * mod.g10[m, n0] * complex(mod.filt(1 - j, dk))
        terms.append(RationalTerm(pref, (sd, complex(mod.s_out(j, n0, dk)))))
    for n in range(mod.dim):
        for l in range(mod.dim):
            c2 = -4j * math.pi * xi * nrm * g * mod.g12[m, n] * mod.g21[n, l] * mod.g10[l, n0]
            c3 = -2j * math.pi * xi * nrm * g * mod.g10[m, n] * mod.g01[n, l] * mod.g10[l, n0]
            for j in (0, 1):
                se = complex(mod.s_e_cav(j, l))
                terms.append(RationalTerm(c2, (sd, sig, complex(mod.s_b(n)), se)))
                terms.append(RationalTerm(c3, (sd, sig, complex(mod.s_out(j, n, dk)), se)))
    return terms


def _check_label(m, trunc):
    if not 0 <= m <= trunc.n_ph:
        raise InvalidParameterError("m", f"must lie in [0, n_ph={trunc.n_ph}], got {m}")


# ---------------------------------------------------------------- vectorized evaluators


def a_of_t(mod: TransientModel, times) -> np.ndarray:
    """A_{n0,m}(t) for all m; shape (T, M)."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((t.size, mod.dim), dtype=complex)
    tol = _cluster_tol(mod.params.gamma_c)
    for m in range(mod.dim):
        terms = laplace_a(m, mod.n0, mod.params, mod.packet, mod.trunc, mod.order)
        out[:, m] = invert(terms, t, tol)
    return out


@dataclass(frozen=True, eq=False)
class _BSlots:
    """Partial fractions of the B~ bracket (everything except 1/(s - s_D))."""

    sigma_res: np.ndarray   # (M,)            residue at s_sigma from the cascade group
    b_poles: np.ndarray     # (N,)
    b_res: np.ndarray       # (M, N)
    cav_poles: np.ndarray   # (2, L)
    cav_res: np.ndarray     # (M, 2, L)       cascade group only
    c3: np.ndarray          # (M, N, L)       sequential coefficients


def _b_slots(mod: TransientModel) -> _BSlots:
    par = mod.params
    g, xi, nrm, n0 = par.gamma_c, par.xi, mod.norm, mod.n0
    lab = np.arange(mod.dim)
    sig = mod.s_sigma()
    sb = mod.s_b(lab)                                            # (N,)
    se = np.stack([mod.s_e_cav(0, lab), mod.s_e_cav(1, lab)])     # (2, L)
    c2 = -4j * math.pi * xi * nrm * g * np.einsum("mn,nl,l->mnl", mod.g12, mod.g21, mod.g10[:, n0])
    c3 = -2j * math.pi * xi * nrm * g * np.einsum("mn,nl,l->mnl", mod.g10, mod.g01, mod.g10[:, n0])
    sig_res = np.zeros(mod.dim, dtype=complex)
    b_res = np.zeros((mod.dim, mod.dim), dtype=complex)
    cav_res = np.zeros((mod.dim, 2, mod.dim), dtype=complex)
    for j in (0, 1):
        e = se[j][None, :]                                        # (1, L)
        b = sb[:, None]                                           # (N, 1)
        sig_res += np.einsum("mnl,nl->m", c2, 1.0 / ((sig - b) * (sig - e)))
        b_res += np.einsum("mnl,nl->mn", c2, 1.0 / ((b - sig) * (b - e)))
        cav_res[:, j, :] += np.einsum("mnl,nl->ml", c2, 1.0 / ((e - sig) * (e - b)))
    return _BSlots(sig_res, sb, b_res, se, cav_res, c3)


def _b_residues(mod: TransientModel, k, slots: _BSlots):
    """Partial fractions of the B~ bracket at every dk, all final labels m.

    Returns (fixed poles (S_f,), fixed residues (K, M, S_f), outgoing poles at
    dk = 0 (S_o,), outgoing residues (K, M, S_o)).  Outgoing poles move with
    dk as s_out(dk) = s_out(0) - i dk.
    """
    M, n0 = mod.dim, mod.n0
    lab = np.arange(M)
    par = mod.params
    sig = mod.s_sigma()
    K = k.size
    r_sig = np.broadcast_to(slots.sigma_res[None, :], (K, M)).copy()
    r_b = np.broadcast_to(slots.b_res[None], (K, M, M))
    r_cav = [np.broadcast_to(slots.cav_res[None, :, j, :], (K, M, M)).copy() for j in (0, 1)]
    r_out = []
    for j in (0, 1):
        so = mod.s_out(j, lab[None, :], k[:, None])               # (K, N)
        e = slots.cav_poles[j]                                    # (L,)
        inv_se = 1.0 / (so[:, :, None] - e[None, None, :])        # (K, N, L)
        ro = np.einsum("mnl,knl->kmn", slots.c3, inv_se) / (so - sig)[:, None, :]
        r_cav[j] += np.einsum("mnl,knl->kml", slots.c3, -inv_se) / (e - sig)[None, None, :]
        r_sig += np.einsum("mnl,knl->km", slots.c3,
                           1.0 / ((sig - so)[:, :, None] * (sig - e)[None, None, :]))
        # direct filtering of photon j lands on s_out(j, n0, dk)
        ro[:, :, n0] += (-2 * math.pi * par.xi * mod.norm * mod.g10[:, n0])[None, :] \
            * mod.filt(1 - j, k)[:, None]
        r_out.append(ro)
    fixed_poles = np.concatenate([[sig], slots.b_poles, slots.cav_poles[0], slots.cav_poles[1]])
    fixed_res = np.concatenate([r_sig[..., None], r_b, r_cav[0], r_cav[1]], axis=-1)
    out_poles = np.concatenate([mod.s_out(0, lab, 0.0), mod.s_out(1, lab, 0.0)])
    out_res = np.concatenate(r_out, axis=-1)
    return fixed_poles, fixed_res, out_poles, out_res


def b_of_t(mod: TransientModel, dk, times, slots: _BSlots | None = None) -> np.ndarray:
    """B_{n0,m,k}(t) for all m; shape (K, T, M).

    Writes B~ = G(s) / (s - s_D) with G a sum of simple poles p_i of residue
    r_i, so that B(t) = sum_i w_i (exp(p_i t) - exp(s_D t)) with
    w_i = r_i / (p_i - s_D).  Outgoing-photon poles and s_D share the phase
    exp(-i dk t), so everything reduces to small matrix products.
    """
    if mod.has_internal_confluence():
        return _b_of_t_generic(mod, dk, times)
    slots = _b_slots(mod) if slots is None else slots
    k = np.atleast_1d(np.asarray(dk, dtype=float))
    t = np.atleast_1d(np.asarray(times, dtype=float))
    lab = np.arange(mod.dim)
    pf, rf, po, ro = _b_residues(mod, k, slots)
    sd0 = mod.s_d(lab, 0.0)                                       # (M,)
    sd = sd0[None, :] - 1j * k[:, None]                           # (K, M)
    df = pf[None, None, :] - sd[:, :, None]                       # (K, M, S_f)
    do = po[None, :] - sd0[:, None]                               # (M, S_o), dk-free
    scale = max(1.0, mod.params.gamma_c) * 1e-6
    if np.min(np.abs(df)) < scale or np.min(np.abs(do)) < scale:
        return _b_of_t_phi(mod, k, t, pf, rf, po, ro, sd)
    wf = rf / df
    wo = ro / do[None]
    ef = np.exp(np.outer(pf, t))                                  # (S_f, T)
    eo = np.exp(np.outer(po, t))                                  # (S_o, T)
    ed = np.exp(np.outer(sd0, t))                                 # (M, T)
    phase = np.exp(-1j * np.outer(k, t))                          # (K, T)
    fixed = np.einsum("kms,st->ktm", wf, ef)
    moving = np.einsum("kms,st->ktm", wo, eo)
    wsum = wf.sum(axis=-1) + wo.sum(axis=-1)                      # (K, M)
    moving = moving - wsum[:, None, :] * ed.T[None]
    return fixed + phase[:, :, None] * moving


def _b_of_t_phi(mod, k, t, pf, rf, po, ro, sd):
    """Same as b_of_t with the divided difference kept intact (near-coincident poles)."""
    tt = t[None, :, None]
    out = np.zeros((k.size, t.size, mod.dim), dtype=complex)
    for i, p in enumerate(pf):
        out += rf[:, None, :, i] * _phi1(p, sd[:, None, :], tt)
    for i, p in enumerate(po):
        pk = p - 1j * k[:, None, None]
        out += ro[:, None, :, i] * _phi1(pk, sd[:, None, :], tt)
    return out


def _b_of_t_generic(mod, dk, times):
    k = np.atleast_1d(np.asarray(dk, dtype=float))
    t = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((k.size, t.size, mod.dim), dtype=complex)
    tol = _cluster_tol(mod.params.gamma_c)
    for i, kk in enumerate(k):
        for m in range(mod.dim):
            terms = laplace_b(m, kk, mod.n0, mod.params, mod.packet, mod.trunc, mod.order)
            out[i, :, m] = invert(terms, t, tol)
    return out


# ---------------------------------------------------------------- statistics


def g2_of_probs(p1, p2):
    """Equal-time second-order correlation 2 P2 / (2 P2 + P1)^2.

    Returns NaN (undefined, not zero) where both inputs are below 1e-300.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if np.any(p1 < 0) or np.any(p2 < 0):
        raise InvalidParameterError("p1/p2", "probabilities must be >= 0")
    undefined = (p1 < G2_FLOOR) & (p2 < G2_FLOOR)
    tot = np.where(undefined, 1.0, 2 * p2 + p1)
    val = np.where(undefined, np.nan, (2 * p2 / tot) / tot)
    return val[()]


@dataclass(frozen=True)
class TransientTrace:
    times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    g2: np.ndarray
    p1_error: np.ndarray | None = None


def sideband_resonances(n_max: int) -> list[float]:
    """Coupling strengths sqrt(n/2), n = 0..n_max, where the two-photon
    resonance 2 delta + 4 nu coincides with the n-th phonon sideband."""
    if n_max < 0:
        raise InvalidParameterError("n_max", "must be >= 0")
    return [math.sqrt(n / 2) for n in range(n_max + 1)]


def k_breakpoints(mod: TransientModel, window: float) -> np.ndarray:
    """Panel edges graded towards the spectral features of |B(dk, t)|^2."""
    par, pk = mod.params, mod.packet
    g, eps, nu = par.gamma_c, pk.epsilon, par.nu
    z = np.arange(-mod.dim - 1, mod.dim + 2)
    narrow = np.concatenate([pk.delta1 + z, pk.delta2 + z])
    med_w = max(min(g / 2, abs(2 * eps - g / 2) or g / 2), eps)
    medium = np.concatenate([nu + pk.delta1 + pk.delta2 + z, -3 * nu + z, -nu + z])
    edges = [np.linspace(-window, window, int(np.ceil(2 * window / 0.5)) + 1)]
    for centers, w in ((narrow, eps), (medium, med_w)):
        for c in centers:
            if abs(c) >= window:
                continue
            h = np.asarray([w * 2.0**i for i in range(-1, 40) if w * 2.0**i < 0.5])
            edges.append(np.concatenate([[c], c - h, c + h]))
    e = np.unique(np.clip(np.concatenate(edges), -window, window))
    return e[np.concatenate([[True], np.diff(e) > 1e-12])]


def _phase_pair(f, k, t):
    """f at k and at k + pi/t for every time; returns (even part, odd amplitude).

    A term oscillating like cos(k t + phi) cancels in the even part.
    """
    shift = np.pi / np.maximum(t, 1e-300)
    sgn = np.sign(k)
    f0 = f(np.array([k]))[0]
    f1 = np.diagonal(f(k + sgn * shift))
    return 0.5 * (f0 + f1), 0.5 * np.abs(f0 - f1)


def _lorentzian_tails(f, window, t):
    """Contribution of |k| > window to the integral of f(k, t) over k.

    Beyond the window f -> A(t) / k^2 plus a part oscillating like
    cos(k t + phi) / k^2; the first integrates to A / window, the second to
    O(1 / (window^2 t)), which is reported as error together with the
    deviation of the even part from its asymptote at the window edge.
    """
    far = 1e6 * window
    val = np.zeros(t.size)
    err = np.zeros(t.size)
    for side in (-1.0, 1.0):
        a_far, _ = _phase_pair(f, side * far, t)
        a_edge, osc = _phase_pair(f, side * window, t)
        coef = a_far * far**2
        val += coef / window
        err += np.abs(a_edge * window**2 - coef) / window
        err += 2 * osc / np.maximum(t, 1e-300)
    live = t > 0
    return np.where(live, val, 0.0), np.where(live, err, 0.0)


def _mirror_weights(mirror: MirrorInit, trunc: Truncation):
    amps = mirror.amplitudes(trunc.n_ph, trunc.tol)
    trunc.check_labels(len(amps) - 1)
    return amps


def _p2_trace(amps, labels, is_pure, mods, t):
    a_list = {n0: a_of_t(mods[n0], t) for n0 in labels}
    if is_pure:
        a_tot = sum(amps[n0] * a_list[n0] for n0 in labels)
        return np.sum(np.abs(a_tot) ** 2, axis=1)
    return sum(amps[n0].real * np.sum(np.abs(a_list[n0]) ** 2, axis=1) for n0 in labels)


def two_photon_probability(mirror: MirrorInit, params: SystemParams, packet: PhotonPacket,
                           trunc: Truncation, times, order: str = "exact") -> np.ndarray:
    """P2(t) alone.  It needs no Delta_k quadrature, so dense time grids are cheap."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise InvalidParameterError("times", "must be >= 0")
    amps = _mirror_weights(mirror, trunc)
    labels = [n0 for n0 in range(len(amps)) if amps[n0] != 0]
    mods = {n0: TransientModel(params, packet, trunc, n0, order) for n0 in labels}
    return _p2_trace(amps, labels, mirror.is_pure, mods, t)


def _p1_trace(amps, labels, is_pure, params, packet, trunc, t, order):
    """P1(t) by Delta_k quadrature of sum_m |B_m(dk, t)|^2, with its error estimate."""
    mods = {n0: TransientModel(params, packet, trunc, n0, order) for n0 in labels}
    slots = {n0: _b_slots(mods[n0]) for n0 in labels}

    def integrand(k):
        out = np.zeros((k.size, t.size))
        for i in range(0, k.size, 256):
            kk = k[i:i + 256]
            if is_pure:
                tot = sum(amps[n0] * b_of_t(mods[n0], kk, t, slots[n0]) for n0 in labels)
                out[i:i + 256] = np.sum(np.abs(tot) ** 2, axis=2)
            else:
                out[i:i + 256] = sum(amps[n0].real * np.sum(np.abs(b_of_t(mods[n0], kk, t, slots[n0])) ** 2,
                                                            axis=2) for n0 in labels)
        return out

    window = trunc.window(params, packet)
    p1, err, _ = adaptive_gl(integrand, k_breakpoints(mods[labels[0]], window),
                             trunc.quad_tol, what="Delta_k quadrature")
    tail, tail_err = _lorentzian_tails(integrand, window, t)
    return p1 + tail, err + tail_err


def probabilities(mirror: MirrorInit, params: SystemParams, packet: PhotonPacket,
                  trunc: Truncation, times, order: str = "exact") -> TransientTrace:
    """P1(t), P2(t) and g2(t) of the cavity field for a given mirror state.

    When eps = gamma_c / 2 makes two poles of the one-photon bracket coincide,
    P1 is the mean of the traces at eps (1 +- CONFLUENCE_SPLIT): the result is
    smooth in eps, so the bias is second order in the split while every
    residue stays finite.  P2 is always inverted exactly, double poles included.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise InvalidParameterError("times", "must be >= 0")
    amps = _mirror_weights(mirror, trunc)
    labels = [n0 for n0 in range(len(amps)) if amps[n0] != 0]
    mods = {n0: TransientModel(params, packet, trunc, n0, order) for n0 in labels}

    p2 = _p2_trace(amps, labels, mirror.is_pure, mods, t)
    args = (amps, labels, mirror.is_pure, params)
    if any(m.has_internal_confluence() for m in mods.values()):
        h = CONFLUENCE_SPLIT
        lo = _p1_trace(*args, replace(packet, epsilon=packet.epsilon * (1 - h)), trunc, t, order)
        hi = _p1_trace(*args, replace(packet, epsilon=packet.epsilon * (1 + h)), trunc, t, order)
        p1 = 0.5 * (lo[0] + hi[0])
        err = 0.5 * (lo[1] + hi[1]) + h * np.abs(hi[0] - lo[0])
    else:
        p1, err = _p1_trace(*args, packet, trunc, t, order)
    g2 = g2_of_probs(np.maximum(p1, 0), np.maximum(p2, 0))
    g2 = np.where(2 * p2 + p1 > G2_REPORT_FLOOR, g2, np.nan)
    return TransientTrace(t, p1, p2, np.atleast_1d(g2), err)


def resonant_packet(g0: float, gamma_c: float, epsilon: float) -> tuple[SystemParams, PhotonPacket]:
    """Parameters with both photons tuned to the single-photon resonance delta = -nu."""
    params = SystemParams(g0, gamma_c)
    return params, PhotonPacket.single_photon_resonant(params, epsilon)


def g2_scan(g0_values, t_probe: float, mirror: MirrorInit, gamma_c: float, epsilon: float,
            trunc: Truncation, order: str = "exact", workers: int = 1) -> list[tuple[float, float]]:
    """g2(t_probe) as a function of g0 with delta1 = delta2 = -nu(g0)."""
    if not t_probe > 0:
        raise InvalidParameterError("t_probe", "must be > 0")
    jobs = [(float(g), t_probe, mirror, gamma_c, epsilon, trunc, order) for g in g0_values]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_scan_point, jobs))
    return [_scan_point(j) for j in jobs]


def _scan_point(args):
    g0, t_probe, mirror, gamma_c, epsilon, trunc, order = args
    params, packet = resonant_packet(g0, gamma_c, epsilon)
    tr = probabilities(mirror, params, packet, trunc, [t_probe], order)
    return (g0, float(tr.g2[0]))


def single_photon_occupation(gamma_c: float, epsilon: float, delta: float, t):
    """Cavity occupation driven by one Lorentzian photon in an empty linear cavity."""
    t = np.asarray(t, dtype=float)
    amp = np.exp(-(1j * delta + epsilon) * t) - np.exp(-gamma_c * t / 2)
    return 2 * gamma_c * epsilon * np.abs(amp) ** 2 / ((gamma_c / 2 - epsilon) ** 2 + delta**2)

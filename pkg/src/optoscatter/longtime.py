"""Long-time two-photon scattering amplitudes C_{n0,m,p,q}(t -> infinity).

Four processes contribute: direct reflection (I), one photon scattered and
one reflected (II), sequential scattering (III) and cascade scattering
through the two-photon cavity state (IV).  The phonon sums of III and IV are
contracted along the chain l -> n' -> n, so a call costs O(n_ph^2) per
(point, final phonon) instead of O(n_ph^3).

The interaction-picture phase exp(-i (p + q + m) t) is dropped everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import (InvalidParameterError, PhotonPacket, SystemParams, Truncation,
                   packet_norm)
from .franck_condon import fc_table


@dataclass(frozen=True, eq=False)
class AmplitudeContext:
    """Everything needed to evaluate amplitudes for one (params, packet, trunc, n0)."""

    params: SystemParams
    packet: PhotonPacket
    trunc: Truncation
    n0: int = 0
    order: str = "exact"
    # overlap matrices, keyed like franck_condon.COMBOS
    g01: np.ndarray = field(init=False, repr=False)  # <m|n~(1)>
    g10: np.ndarray = field(init=False, repr=False)  # <m~(1)|n>
    g12: np.ndarray = field(init=False, repr=False)  # <m~(1)|n~(2)>
    g21: np.ndarray = field(init=False, repr=False)  # <m~(2)|n~(1)>
    norm: float = field(init=False)

    def __post_init__(self):
        if self.n0 < 0 or self.n0 > self.trunc.n_ph:
            raise InvalidParameterError("n0", f"must lie in [0, n_ph={self.trunc.n_ph}], got {self.n0}")
        dim = self.trunc.dim
        plus = fc_table(self.params.beta0, dim, self.order).values
        minus = fc_table(-self.params.beta0, dim, self.order).values
        object.__setattr__(self, "g01", plus)
        object.__setattr__(self, "g12", plus)
        object.__setattr__(self, "g10", minus)
        object.__setattr__(self, "g21", minus)
        object.__setattr__(self, "norm", packet_norm(self.packet))

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def with_n0(self, n0: int) -> "AmplitudeContext":
        return AmplitudeContext(self.params, self.packet, self.trunc, n0, self.order)

    def with_packet(self, packet: PhotonPacket) -> "AmplitudeContext":
        return AmplitudeContext(self.params, packet, self.trunc, self.n0, self.order)


def build_context(params, packet, trunc, n0=0, order="exact") -> AmplitudeContext:
    return AmplitudeContext(params, packet, trunc, n0, order)


# ---------------------------------------------------------------- denominators


@dataclass
class Denominators:
    """M1..M6 on broadcast grids.

    Axes: point, m, summed label.  ``da`` is the detuning of the photon
    whose partner carries the filter factor (delta1 in the unswapped term).
    """

    m1: np.ndarray  # (P, M, N)  label n
    m2: np.ndarray  # (P, M)
    m3: np.ndarray  # (P, M)
    m4: np.ndarray  # (P, M, N)  label l
    m5: np.ndarray  # (P, M, N)  label n'
    m6: np.ndarray  # (P, M, N)  label n'


def denominators(ctx: AmplitudeContext, dp, dq, da: float, ms=None) -> Denominators:
    par, pk = ctx.params, ctx.packet
    g, nu, eps, wm = par.gamma_c, par.nu, pk.epsilon, par.omega_m
    p = np.atleast_1d(np.asarray(dp, dtype=float))[:, None]
    q = np.atleast_1d(np.asarray(dq, dtype=float))[:, None]
    m = np.arange(ctx.dim) if ms is None else np.atleast_1d(ms)
    m = m[None, :]
    lab = np.arange(ctx.dim)[None, None, :]
    s = p + q
    m1 = (p + nu + 1j * g / 2)[..., None] + (m[..., None] - lab) * wm
    m2 = p - da + (m - ctx.n0) * wm + 1j * eps
    m3 = s - pk.delta1 - pk.delta2 + (m - ctx.n0) * wm + 2j * eps
    m4 = (s - da + nu + 1j * (g / 2 + eps))[..., None] + (m[..., None] - lab) * wm
    m5 = (p - da + 1j * eps)[..., None] + (m[..., None] - lab) * wm
    m6 = (s + 4 * nu + 1j * g)[..., None] + (m[..., None] - lab) * wm
    return Denominators(m1, m2, m3, m4, m5, m6)


def _orientations(ctx):
    d1, d2 = ctx.packet.delta1, ctx.packet.delta2
    return ((d1, d2), (d2, d1))


# ---------------------------------------------------------------- components


def _c1(ctx, p, q, ms):
    eps = ctx.packet.epsilon
    d1, d2 = ctx.packet.delta1, ctx.packet.delta2
    val = 1.0 / ((p - d1 + 1j * eps) * (q - d2 + 1j * eps))
    out = np.zeros((p.size, ms.size), dtype=complex)
    out[:, ms == ctx.n0] = val[:, None]
    return out


def _c2(ctx, p, q, ms):
    g, eps = ctx.params.gamma_c, ctx.packet.epsilon
    f2 = ctx.g01[ms, :] * ctx.g10[:, ctx.n0][None, :]  # (M, N)
    out = 0
    for da, db in _orientations(ctx):
        den = denominators(ctx, p, q, da, ms)
        inner = np.sum(f2[None] / den.m1, axis=-1)
        out = out + (-1j * g) * inner / (den.m2 * (q - db + 1j * eps)[:, None])
    return out


def _c3(ctx, p, q, ms):
    g = ctx.params.gamma_c
    out = 0
    for da, _ in _orientations(ctx):
        den = denominators(ctx, p, q, da, ms)
        v = ctx.g10[:, ctx.n0][None, None, :] / den.m4          # over l
        u = np.einsum("pml,kl->pmk", v, ctx.g01) / den.m5       # over n'
        w = np.einsum("pmk,nk->pmn", u, ctx.g10)                # over n
        x = np.einsum("pmn,mn->pm", w / den.m1, ctx.g01[ms, :])
        out = out + (-g**2) * x / den.m3
    return out


def _c4(ctx, p, q, ms):
    g = ctx.params.gamma_c
    out = 0
    for da, _ in _orientations(ctx):
        den = denominators(ctx, p, q, da, ms)
        v = ctx.g10[:, ctx.n0][None, None, :] / den.m4
        u = np.einsum("pml,kl->pmk", v, ctx.g21) / den.m6
        w = np.einsum("pmk,nk->pmn", u, ctx.g12)
        x = np.einsum("pmn,mn->pm", w / den.m1, ctx.g01[ms, :])
        out = out + (-2 * g**2) * x / den.m3
    return out


def _prep(ctx, m, dp, dq):
    p, q = np.broadcast_arrays(np.asarray(dp, dtype=float), np.asarray(dq, dtype=float))
    shape = p.shape
    ms = np.arange(ctx.dim) if m is None else np.atleast_1d(np.asarray(m))
    if np.any(ms < 0):
        raise InvalidParameterError("m", "must be >= 0")
    return p.ravel(), q.ravel(), ms, shape


def _finish(val, shape, m):
    if m is None:
        return val.reshape(shape + (val.shape[-1],))
    return val[:, 0].reshape(shape)[()]


def _component(fn, ctx, m, dp, dq):
    p, q, ms, shape = _prep(ctx, m, dp, dq)
    keep = ms <= ctx.trunc.n_ph
    out = np.zeros((p.size, ms.size), dtype=complex)
    if keep.any():
        out[:, keep] = fn(ctx, p, q, ms[keep])
    return _finish(out, shape, m)


def amp_c1(ctx, m, dp, dq):
    """Direct reflection, delta_{m,n0} / ((p - d1 + i eps)(q - d2 + i eps))."""
    return _component(_c1, ctx, m, dp, dq)


def amp_c2(ctx, m, dp, dq):
    """One photon scattered through the one-photon cavity state, one reflected."""
    return _component(_c2, ctx, m, dp, dq)


def amp_c3(ctx, m, dp, dq):
    """Sequential scattering: the cavity never holds more than one photon."""
    return _component(_c3, ctx, m, dp, dq)


def amp_c4(ctx, m, dp, dq):
    """Cascade scattering through the two-photon displaced states."""
    return _component(_c4, ctx, m, dp, dq)


def _c_sum(ctx, p, q, ms):
    return _c1(ctx, p, q, ms) + _c2(ctx, p, q, ms) + _c3(ctx, p, q, ms) + _c4(ctx, p, q, ms)


def c_inf_all(ctx, dp, dq, ms=None) -> np.ndarray:
    """Long-time amplitudes for all final phonon numbers, shape dp.shape + (M,)."""
    p, q, ms_arr, shape = _prep(ctx, ms, dp, dq)
    val = ctx.norm * (_c_sum(ctx, p, q, ms_arr) + _c_sum(ctx, q, p, ms_arr))
    return val.reshape(shape + (ms_arr.size,))


def assemble_c_inf(ctx, m, dp, dq):
    """C_{n0,m,p,q}(infinity), symmetrized under p <-> q."""
    p, q, ms, shape = _prep(ctx, m, dp, dq)
    out = np.zeros((p.size, ms.size), dtype=complex)
    keep = ms <= ctx.trunc.n_ph
    if keep.any():
        mk = ms[keep]
        out[:, keep] = ctx.norm * (_c_sum(ctx, p, q, mk) + _c_sum(ctx, q, p, mk))
    return _finish(out, shape, m)


# ---------------------------------------------------------------- naive references


def amp_c3_naive(ctx, m, dp, dq):
    """O(n_ph^3) reference for amp_c3 (explicit triple sum)."""
    return _naive(ctx, m, dp, dq, cascade=False)


def amp_c4_naive(ctx, m, dp, dq):
    """O(n_ph^3) reference for amp_c4 (explicit triple sum)."""
    return _naive(ctx, m, dp, dq, cascade=True)


def _naive(ctx, m, dp, dq, cascade):
    p, q, ms, shape = _prep(ctx, m, dp, dq)
    g = ctx.params.gamma_c
    n0 = ctx.n0
    out = np.zeros((p.size, ms.size), dtype=complex)
    for j, mm in enumerate(ms):
        if mm > ctx.trunc.n_ph:
            continue
        for da, _ in _orientations(ctx):
            den = denominators(ctx, p, q, da, [mm])
            m1, m3 = den.m1[:, 0, :], den.m3[:, 0]
            m4 = den.m4[:, 0, :]
            mid = den.m6[:, 0, :] if cascade else den.m5[:, 0, :]
            if cascade:
                f = np.einsum("n,nk,kl,l->nkl", ctx.g01[mm], ctx.g12, ctx.g21, ctx.g10[:, n0])
                pref = -2 * g**2
            else:
                f = np.einsum("n,nk,kl,l->nkl", ctx.g01[mm], ctx.g10, ctx.g01, ctx.g10[:, n0])
                pref = -g**2
            terms = f[None] / (m1[:, :, None, None] * mid[:, None, :, None] * m4[:, None, None, :])
            out[:, j] += pref * terms.sum(axis=(1, 2, 3)) / m3
    return _finish(out, shape, m)


# ---------------------------------------------------------------- Laplace-domain form


def laplace_c_bracket(ctx, s, m, dp, dq):
    """(s + i(p + q + m)) * C~_{m,p,q}(s), written directly in the Laplace variable.

    Naive phonon sums; used as an independent check of the long-time
    amplitudes, which equal this bracket at s = -i(p + q + m).
    """
    par, pk = ctx.params, ctx.packet
    g, nu, eps, n0 = par.gamma_c, par.nu, pk.epsilon, ctx.n0
    d = (pk.delta1, pk.delta2)
    p = np.asarray(dp, dtype=float)
    q = np.asarray(dq, dtype=float)
    s = np.asarray(s, dtype=complex)
    lab = np.arange(ctx.dim)

    def half(x, y):
        t1 = (1.0 if m == n0 else 0.0) / ((x - d[0] + 1j * eps) * (y - d[1] + 1j * eps))
        sig = s + 2 * eps + 1j * (d[0] + d[1] + n0)
        cav1 = s[..., None] + g / 2 + 1j * (x[..., None] - nu + lab)        # label n
        t2 = 0
        t3 = 0
        for j in (0, 1):
            da, db = d[j], d[1 - j]
            pair = 1.0 / ((s + eps + 1j * (x + da + n0)) * (x - db + 1j * eps))
            t2 = t2 + pair[..., None] * 1j * g * ctx.g01[m] * ctx.g10[:, n0] / cav1
            e_l = s[..., None] + eps + g / 2 + 1j * (da - nu + lab)            # label l
            out_k = s[..., None] + eps + 1j * (x[..., None] + da + lab)       # label n'
            f3 = np.einsum("n,nk,kl,l->nkl", ctx.g01[m], ctx.g10, ctx.g01, ctx.g10[:, n0])
            t3 = t3 - g**2 * np.sum(f3 / (sig[..., None, None, None] * cav1[..., :, None, None]
                                          * out_k[..., None, :, None] * e_l[..., None, None, :]),
                                    axis=(-3, -2, -1))
        t2 = np.sum(t2, axis=-1)
        f4 = np.einsum("n,nk,kl,l->nkl", ctx.g01[m], ctx.g12, ctx.g21, ctx.g10[:, n0])
        two = s[..., None] + g + 1j * (lab - 4 * nu)                           # label n'
        e_sum = sum(1.0 / (s[..., None] + eps + g / 2 + 1j * (dj - nu + lab)) for dj in d)
        t4 = -2 * g**2 * np.sum(f4 / (sig[..., None, None, None] * two[..., None, :, None]
                                      * cav1[..., :, None, None]) * e_sum[..., None, None, :],
                                axis=(-3, -2, -1))
        return t1 + t2 + t3 + t4

    return ctx.norm * (half(p, q) + half(q, p))


def laplace_c(ctx, s, m, dp, dq):
    """Full Laplace-domain amplitude C~_{m,p,q}(s)."""
    p = np.asarray(dp, dtype=float)
    q = np.asarray(dq, dtype=float)
    return laplace_c_bracket(ctx, s, m, p, q) / (s + 1j * (p + q + m * ctx.params.omega_m))


def persistent_pole_residue(ctx, m, dp, dq):
    """Residue of C~(s) at its only imaginary-axis pole s = -i(p + q + m)."""
    p = np.asarray(dp, dtype=float)
    q = np.asarray(dq, dtype=float)
    s_star = -1j * (p + q + m * ctx.params.omega_m)
    return laplace_c_bracket(ctx, s_star, m, p, q)


# ---------------------------------------------------------------- unitarity


def rational_l2(poles, res) -> np.ndarray:
    """Integral over the real line of |sum_k r_k / (x - a_k)|^2.

    poles, res: (..., K) arrays; no pole may lie on the real axis.  Only
    pairs of poles in the same half-plane contribute.
    """
    poles = np.asarray(poles, dtype=complex)
    res = np.asarray(res, dtype=complex)
    up = poles.imag > 0
    total = 0.0
    for mask, sign in ((up, 1.0), (~up, -1.0)):
        r = np.where(mask, res, 0.0)
        a = np.where(mask, poles, 1j * sign)
        total = total + _half_plane_form(a, r, sign)
    return total


def _half_plane_form(a, r, sign):
    """sign * 2 pi i * sum_{k,l} r_k conj(r_l) / (a_k - conj(a_l)), all a on one side."""
    kern = 1.0 / (a[..., :, None] - np.conj(a)[..., None, :])
    val = np.sum(r * (kern @ np.conj(r)[..., None])[..., 0], axis=-1)
    return (sign * 2j * np.pi * val).real


def _line_partial_fractions(ctx, u):
    """Partial fractions in p of C_m(p, u - p) at fixed total detuning u.

    Returns (poles, residues) with shape (U, M, K).  Residues are collected
    into fixed slots: the M1 zeros, the M5 zeros of each orientation (the M2
    zero coincides with the n' = n0 one), the filter pole of each
    orientation and the two poles of the direct term.  The p <-> q image of
    every term follows from the map p -> u - p, which reflects poles to
    u - a and flips residue signs.
    """
    par, pk = ctx.params, ctx.packet
    g, nu, eps, wm, n0 = par.gamma_c, par.nu, pk.epsilon, par.omega_m, ctx.n0
    u = np.atleast_1d(np.asarray(u, dtype=float))[:, None]       # (U, 1)
    U, M = u.shape[0], ctx.dim
    m = np.arange(M)[None, :]                                    # (1, M)
    lab = np.arange(M)
    d1, d2 = pk.delta1, pk.delta2
    c_m = (m[..., None] - lab) * wm                              # (1, M, N)

    pole_m1 = np.broadcast_to(-nu - c_m - 1j * g / 2, (U, M, M))
    r_m1 = np.zeros((U, M, M), dtype=complex)
    pole_m5, r_m5, pole_f, r_f = [], [], [], []

    f2 = ctx.g01 * ctx.g10[:, n0][None, :]                       # (M, N)
    coup = ctx.g01[:, :, None] * ctx.g10[None, :, :]             # (M, N, N')
    m3 = u - d1 - d2 + (m - n0) * wm + 2j * eps                  # (U, M)
    for da, db in _orientations(ctx):
        p5 = np.broadcast_to(da - c_m - 1j * eps, (U, M, M))     # M5 zeros, label n'
        r5 = np.zeros((U, M, M), dtype=complex)
        pf = np.broadcast_to(u - db + 1j * eps, (U, M))          # zero of the filter factor

        # II: -i g F2 / (M1(n) M2 (u - p - db + i eps)), M2 zero is p5[..., n0]
        k2 = -1j * g * f2[None]                                  # (1, M, N)
        pm1 = pole_m1
        pm2 = p5[..., n0][..., None]
        pff = pf[..., None]
        r_m1 += -k2 / ((pm1 - pm2) * (pm1 - pff))
        r5[..., n0] += np.sum(-k2 / ((pm2 - pm1) * (pm2 - pff)), axis=-1)
        rf = np.sum(-k2 / ((pff - pm1) * (pff - pm2)), axis=-1)

        # III: -g^2 F3 / (M1 M3 M4 M5); M3, M4 depend on u only
        m4 = (u - da + nu + 1j * (g / 2 + eps))[..., None] + c_m  # (U, M, L)
        h = (ctx.g10[:, n0][None, None, :] / m4) @ ctx.g01.T     # (U, M, N')
        h = -g**2 * h / m3[..., None]
        inv = 1.0 / (pole_m1[0][:, :, None] - p5[0][:, None, :])  # (M, N, N')
        r_m1 += np.einsum("mnk,umk->umn", coup * inv, h)
        r5 += np.einsum("mnk,umk->umk", -coup * inv, h)

        # IV: -2 g^2 F4 / (M1 M3 M4 M6)
        m6 = (u + 4 * nu + 1j * g)[..., None] + c_m               # (U, M, N')
        x = ((ctx.g10[:, n0][None, None, :] / m4) @ ctx.g21.T / m6) @ ctx.g12.T
        r_m1 += -2 * g**2 * ctx.g01[None] * x / m3[..., None]

        pole_m5.append(p5)
        r_m5.append(r5)
        pole_f.append(pf[..., None])
        r_f.append(rf[..., None])

    # I: delta_{m n0} / ((p - d1 + i eps)(u - p - d2 + i eps))
    ind = (m == n0).astype(float)
    a1 = np.broadcast_to(d1 - 1j * eps + 0 * u, (U, M))
    a2 = np.broadcast_to(u - d2 + 1j * eps, (U, M))
    r1 = -ind / (a1 - a2)

    # M1, M5 and a1 zeros lie below the real axis, the filter and a2 zeros above;
    # the p -> u - p image swaps the two groups.
    lower = np.concatenate([pole_m1] + pole_m5 + [a1[..., None]], axis=-1)
    r_low = np.concatenate([r_m1] + r_m5 + [r1[..., None]], axis=-1) * ctx.norm
    upper = np.concatenate(pole_f + [a2[..., None]], axis=-1)
    r_up = np.concatenate(r_f + [-r1[..., None]], axis=-1) * ctx.norm
    uu = u[..., None]
    low_all = np.concatenate([lower, uu - upper], axis=-1)
    rl_all = np.concatenate([r_low, -r_up], axis=-1)
    up_all = np.concatenate([upper, uu - lower], axis=-1)
    ru_all = np.concatenate([r_up, -r_low], axis=-1)
    return (low_all, rl_all), (up_all, ru_all)


def line_density(ctx, u) -> np.ndarray:
    """Integral over p of |C_m(p, u - p)|^2 for every m; shape (U, M)."""
    (lo, r_lo), (up, r_up) = _line_partial_fractions(ctx, u)
    return _half_plane_form(lo, r_lo, -1.0) + _half_plane_form(up, r_up, 1.0)


def _u_features(ctx):
    par, pk = ctx.params, ctx.packet
    nu, eps, g = par.nu, pk.epsilon, par.gamma_c
    d1, d2 = pk.delta1, pk.delta2
    n = ctx.trunc.n_ph
    ints = np.arange(-2 * n - 1, 2 * n + 2)
    narrow = np.unique(np.concatenate([c + ints for c in (d1 + d2, 2 * d1, 2 * d2)]))
    broad = np.unique(np.concatenate([c + ints for c in (d1 - nu, d2 - nu, -2 * nu, -4 * nu)]))
    return narrow, 2 * eps, broad, min(g / 2, g / 2 + eps)


def graded_panels(centers, widths, lo, hi, coarse, levels_per_octave=1):
    """Panel edges refined geometrically towards each centre."""
    edges = [np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / coarse)) + 1))]
    for c, w in zip(centers, widths):
        if c < lo or c > hi:
            continue
        steps = []
        h = w / 2
        while h < coarse:
            steps.append(h)
            h *= 2 ** (1.0 / levels_per_octave)
        steps = np.asarray(steps)
        edges.append(np.concatenate([[c], c - steps, c + steps]))
    e = np.unique(np.clip(np.concatenate(edges), lo, hi))
    keep = np.concatenate([[True], np.diff(e) > 1e-12])
    return e[keep]


def gl_rule(edges, order):
    x, w = leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def long_time_norm(ctx, depth: int = 1, batch: int = 128) -> dict:
    """sum_m of the ordered-region integral of |C(infinity)|^2.

    The inner integral along lines of constant p + q is exact (residues);
    the outer one is composite Gauss-Legendre on panels graded towards the
    narrow total-energy features, with algebraic maps for the two tails.
    ``depth`` multiplies the Gauss-Legendre order and the grading density.
    """
    narrow, w_n, broad, w_b = _u_features(ctx)
    span = np.concatenate([narrow, broad])
    lo, hi = span.min() - 2, span.max() + 2
    centers = np.concatenate([narrow, broad])
    widths = np.concatenate([np.full(narrow.size, w_n), np.full(broad.size, w_b)])
    edges = graded_panels(centers, widths, lo, hi, coarse=0.25 / depth, levels_per_octave=depth)
    nodes, weights = gl_rule(edges, 8 * depth)
    # tails: u = hi / t and u = lo / t on t in (0, 1], the integrand decays like 1/u^2
    tx, tw = leggauss(8 * depth)
    t = 0.5 * (tx + 1)
    tw = 0.5 * tw
    tail_nodes = np.concatenate([hi / t, lo / t])
    tail_weights = np.concatenate([abs(hi) / t**2 * tw, abs(lo) / t**2 * tw])
    nodes = np.concatenate([nodes, tail_nodes])
    weights = np.concatenate([weights, tail_weights])

    per_m = np.zeros(ctx.dim)
    for i in range(0, nodes.size, batch):
        dens = line_density(ctx, nodes[i:i + batch])
        per_m += weights[i:i + batch] @ dens
    per_m *= 0.5  # ordered region q < p
    return {"total": float(per_m.sum()), "per_m": per_m, "n_nodes": int(nodes.size)}

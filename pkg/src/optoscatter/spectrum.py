"""Two-photon joint spectrum S(dp, dq) and summary statistics.

Cost per grid point is O((n_ph + 1)^3) for a single initial phonon label
(all final labels m at once, each with O(n_ph^2) contractions), times the
number of initial labels carried by the mirror state.  Rows of the grid are
independent and may be spread over worker processes; results are always
gathered in row order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InvalidParameterError, MirrorInit, OptoscatterError
from .longtime import AmplitudeContext, c_inf_all


class DegenerateGridError(OptoscatterError):
    """The spectrum vanishes on the whole grid."""


@dataclass(frozen=True)
class GridSpec:
    lo: float = -2.5
    hi: float = 1.5
    n: int = 241

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise InvalidParameterError("grid", f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 2:
            raise InvalidParameterError("grid.n", "need at least 2 points")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)


@dataclass(eq=False)
class SpectrumGrid:
    p_axis: np.ndarray
    q_axis: np.ndarray
    values: np.ndarray          # values[i, j] = S(p_axis[i], q_axis[j])
    metadata: dict = field(default_factory=dict)

    def rows(self):
        """(dp, dq, S) triples, row-major in p."""
        for i, p in enumerate(self.p_axis):
            for j, q in enumerate(self.q_axis):
                yield p, q, self.values[i, j]


def _rows_block(args):
    ctx, weights, is_pure, p_rows, q_axis = args
    out = np.zeros((p_rows.size, q_axis.size))
    labels = [n0 for n0 in range(len(weights)) if weights[n0] != 0]
    ctxs = {n0: ctx.with_n0(n0) for n0 in labels}
    for i, p in enumerate(p_rows):
        pp = np.full(q_axis.shape, p)
        if is_pure:
            tot = sum(weights[n0] * c_inf_all(ctxs[n0], pp, q_axis) for n0 in labels)
            out[i] = np.sum(np.abs(tot) ** 2, axis=-1)
        else:
            out[i] = sum(weights[n0].real * np.sum(np.abs(c_inf_all(ctxs[n0], pp, q_axis)) ** 2, axis=-1)
                         for n0 in labels)
    return out


def joint_spectrum(ctx: AmplitudeContext, mirror: MirrorInit, grid: GridSpec | None = None,
                   workers: int = 1) -> SpectrumGrid:
    """S = sum_m |sum_n0 c_n0 C_{n0,m}|^2 (pure) or sum_m sum_n0 p_n0 |C_{n0,m}|^2 (mixed)."""
    grid = GridSpec() if grid is None else grid
    weights = mirror.amplitudes(ctx.trunc.n_ph, ctx.trunc.tol)
    ctx.trunc.check_labels(len(weights) - 1)
    axis = grid.axis
    blocks = np.array_split(np.arange(axis.size), max(1, min(workers * 4, axis.size)) if workers > 1 else 1)
    jobs = [(ctx, weights, mirror.is_pure, axis[idx], axis) for idx in blocks]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_rows_block, jobs))
    else:
        parts = [_rows_block(j) for j in jobs]
    values = np.concatenate(parts, axis=0)
    meta = {"params": ctx.params, "packet": ctx.packet, "mirror": mirror.to_dict(),
            "trunc": ctx.trunc, "order": ctx.order}
    return SpectrumGrid(axis, axis.copy(), values, meta)


@dataclass(frozen=True)
class SpectrumStats:
    peak_locations: list
    pearson_corr: float
    width_p: float
    width_q: float
    mean_p: float
    mean_q: float

    def as_text(self) -> str:
        peaks = ";".join(f"({p:.6f},{q:.6f})" for p, q in self.peak_locations)
        return "\n".join([f"n_peaks={len(self.peak_locations)}", f"peaks={peaks}",
                          f"pearson_corr={self.pearson_corr:.17g}",
                          f"mean_p={self.mean_p:.17g}", f"mean_q={self.mean_q:.17g}",
                          f"width_p={self.width_p:.17g}", f"width_q={self.width_q:.17g}"])


def find_peaks(values: np.ndarray, floor_fraction: float = 0.01) -> list[tuple[int, int]]:
    """Grid points strictly above all 8 neighbours and above floor * max."""
    s = np.asarray(values, dtype=float)
    pad = np.pad(s, 1, constant_values=-np.inf)
    core = pad[1:-1, 1:-1]
    mask = core > floor_fraction * s.max()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= core > pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
    return [tuple(ix) for ix in np.argwhere(mask)]


def spectrum_stats(grid: SpectrumGrid) -> SpectrumStats:
    s = np.asarray(grid.values, dtype=float)
    if s.size == 0:
        raise InvalidParameterError("grid", "empty spectrum grid")
    total = s.sum()
    if not total > 0:
        raise DegenerateGridError("spectrum is zero on the whole grid")
    w = s / total
    p = grid.p_axis[:, None]
    q = grid.q_axis[None, :]
    mp, mq = float(np.sum(w * p)), float(np.sum(w * q))
    vp = float(np.sum(w * (p - mp) ** 2))
    vq = float(np.sum(w * (q - mq) ** 2))
    cov = float(np.sum(w * (p - mp) * (q - mq)))
    corr = cov / np.sqrt(vp * vq) if vp > 0 and vq > 0 else float("nan")
    peaks = [(float(grid.p_axis[i]), float(grid.q_axis[j])) for i, j in find_peaks(s)]
    return SpectrumStats(peaks, float(corr), float(np.sqrt(vp)), float(np.sqrt(vq)), mp, mq)

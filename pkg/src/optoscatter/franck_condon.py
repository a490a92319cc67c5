"""Displaced number-state overlaps <m| exp(beta (b^dag - b)) |n>.

The closed form is a product of a factorial ratio, a Gaussian, a power of
beta and an associated Laguerre polynomial in beta**2.  Everything is
evaluated in log space with a rescaled three-term recurrence so that labels
up to several hundred neither overflow nor underflow prematurely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidParameterError

_RESCALE = 1e150

ORDERS = ("exact", "zeroth", "first")
COMBOS = ("m2_n1", "m1_n2", "m1_n", "m_n1")


def _laguerre_scaled(n: int, k: int, x: float) -> tuple[float, float]:
    """Generalized Laguerre L_n^k(x) as (mantissa, log_scale)."""
    log_scale = 0.0
    prev, cur = 0.0, 1.0
    for i in range(n):
        prev, cur = cur, ((2 * i + 1 + k - x) * cur - (i + k) * prev) / (i + 1)
        if abs(cur) > _RESCALE:
            prev /= _RESCALE
            cur /= _RESCALE
            log_scale += math.log(_RESCALE)
    return cur, log_scale


def fc_overlap(m: int, n: int, beta: float) -> float:
    """<m| D(beta) |n> for real displacement beta."""
    if m < 0 or n < 0 or int(m) != m or int(n) != n:
        raise InvalidParameterError("m" if m < 0 else "n", "labels must be non-negative integers")
    m, n = int(m), int(n)
    if beta == 0.0:
        return 1.0 if m == n else 0.0
    lo, k = min(m, n), abs(m - n)
    # n >= m carries (-beta)^k, m > n carries beta^k
    s = -beta if n >= m else beta
    lag, lag_scale = _laguerre_scaled(lo, k, beta * beta)
    if lag == 0.0:
        return 0.0
    log_mag = (0.5 * (math.lgamma(lo + 1) - math.lgamma(lo + k + 1)) - 0.5 * beta * beta
               + k * math.log(abs(s)) + lag_scale + math.log(abs(lag)))
    sign = (1.0 if s > 0 or k % 2 == 0 else -1.0) * math.copysign(1.0, lag)
    return sign * math.exp(log_mag)


def overlap_combo(kind: str, m: int, n: int, beta0: float) -> float:
    """Overlaps between bare and l-photon displaced mirror states.

    m2_n1: <m~(2)|n~(1)>   m1_n2: <m~(1)|n~(2)>
    m1_n:  <m~(1)|n>       m_n1:  <m|n~(1)>

    Coaxial real displacements compose without a phase, so each reduces to a
    single overlap with displacement +-beta0.
    """
    if kind in ("m2_n1", "m1_n"):
        return fc_overlap(m, n, -beta0)
    if kind in ("m1_n2", "m_n1"):
        return fc_overlap(m, n, beta0)
    raise InvalidParameterError("kind", f"expected one of {COMBOS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class FcTable:
    beta: float
    dim: int
    values: np.ndarray
    order: str = "exact"

    def __getitem__(self, idx):
        return self.values[idx]

    def transpose(self) -> "FcTable":
        """Table for the opposite displacement, D(-beta) = D(beta)^T."""
        return FcTable(-self.beta, self.dim, _frozen(self.values.T.copy()), self.order)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def fc_table(beta: float, dim: int, order: str = "exact") -> FcTable:
    """dim x dim matrix D[m, n] = <m| D(beta) |n>, exact or expanded in beta."""
    if dim < 1:
        raise InvalidParameterError("dim", f"must be >= 1, got {dim}")
    if order not in ORDERS:
        raise InvalidParameterError("order", f"expected one of {ORDERS}, got {order!r}")
    if order == "zeroth":
        return FcTable(beta, dim, _frozen(np.eye(dim)), order)
    if order == "first":
        d = np.eye(dim)
        n = np.arange(dim - 1)
        d[n + 1, n] += beta * np.sqrt(n + 1)
        d[n, n + 1] -= beta * np.sqrt(n + 1)
        return FcTable(beta, dim, _frozen(d), order)

    d = np.zeros((dim, dim))
    if beta == 0.0:
        return FcTable(beta, dim, _frozen(np.eye(dim)), order)
    x = beta * beta
    lb = math.log(abs(beta))
    lgam = [math.lgamma(i + 1) for i in range(dim)]
    for k in range(dim):
        # one recurrence pass gives L_lo^k for every lo with lo + k < dim
        log_scale = 0.0
        prev, cur = 0.0, 1.0
        for lo in range(dim - k):
            if lo > 0:
                i = lo - 1
                prev, cur = cur, ((2 * i + 1 + k - x) * cur - (i + k) * prev) / (i + 1)
                if abs(cur) > _RESCALE:
                    prev /= _RESCALE
                    cur /= _RESCALE
                    log_scale += math.log(_RESCALE)
            if cur == 0.0:
                continue
            mag = math.exp(0.5 * (lgam[lo] - lgam[lo + k]) - 0.5 * x + k * lb
                           + log_scale + math.log(abs(cur)))
            base = math.copysign(mag, cur)
            # beta^k below the diagonal, (-beta)^k above it
            below = base if (beta > 0 or k % 2 == 0) else -base
            d[lo + k, lo] = below
            if k:
                d[lo, lo + k] = below if k % 2 == 0 else -below
    return FcTable(beta, dim, _frozen(d), order)


def overlap_matrices(beta0: float, dim: int, order: str = "exact") -> dict[str, np.ndarray]:
    """All four overlap matrices used by the amplitude formulas."""
    plus = fc_table(beta0, dim, order).values
    minus = fc_table(-beta0, dim, order).values
    return {"m2_n1": minus, "m1_n": minus, "m1_n2": plus, "m_n1": plus}

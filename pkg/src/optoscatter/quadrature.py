"""Adaptive composite Gauss-Legendre quadrature for vector-valued integrands."""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import ConvergenceError

GL_ORDER = 10


def panel_integrals(f, a, b, order=GL_ORDER):
    """Gauss-Legendre values on panels [a_i, b_i] of f(x) -> (X, T)."""
    x, w = leggauss(order)
    half = 0.5 * (b - a)
    nodes = (half[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
    vals = np.asarray(f(nodes)).reshape(a.size, order, -1)
    return np.einsum("pgt,pg->pt", vals, half[:, None] * w[None, :])


def adaptive_gl(f, edges, rtol, atol=1e-14, max_rounds=40, order=GL_ORDER, what="quadrature"):
    """Integrate f over [edges[0], edges[-1]] with panel bisection.

    ``f`` maps a 1-D array of nodes to an (X, T) array, so several integrals
    (for instance one per time) share the same mesh.  A panel is accepted when
    its value and the sum over its two halves agree to within its share of the
    budget max(rtol * max|I|, atol); the worst case over T decides.
    Returns (integral, error_estimate, n_panels_used).
    """
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    whole = panel_integrals(f, a, b, order)
    done_val = 0.0
    done_err = 0.0
    n_used = 0
    width = float(edges[-1] - edges[0])
    for _ in range(max_rounds):
        mid = 0.5 * (a + b)
        left = panel_integrals(f, a, mid, order)
        right = panel_integrals(f, mid, b, order)
        halves = left + right
        err = np.max(np.abs(halves - whole), axis=1)
        total = done_val + halves.sum(axis=0)
        budget = max(rtol * float(np.max(np.abs(total))), atol)
        # share of the budget proportional to panel width, with a floor so that
        # tiny panels near a sharp feature are not held to an impossible standard
        share = budget * np.maximum((b - a) / width, 1.0 / max(a.size, 1)) * 0.5
        ok = err <= share
        done_val = done_val + halves[ok].sum(axis=0)
        done_err += float(err[ok].sum())
        n_used += int(ok.sum())
        if ok.all():
            return done_val, done_err, n_used
        a = np.concatenate([a[~ok], mid[~ok]])
        b = np.concatenate([mid[~ok], b[~ok]])
        whole = np.concatenate([left[~ok], right[~ok]])
    worst = int(np.argmax(np.max(np.abs(whole), axis=1)))
    raise ConvergenceError(f"{what} did not converge; worst panel [{a[worst]:.6g}, {b[worst]:.6g}]")

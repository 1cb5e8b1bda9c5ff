"""Adaptive and fixed-rule quadrature used by the boundary kernels.

The adaptive driver is a plain Gauss--Kronrod 7/15 panel scheme with a
worst-panel-first subdivision loop.  It is deliberately self-contained:
tests cross-check it against an independent library integrator, so the
two routes must not share code.
"""

from __future__ import annotations

import heapq

import numpy as np

from .errors import NumericalError

# Kronrod-15 abscissae on [-1, 1] (positive half; the rule is symmetric)
# and the matching Kronrod / embedded Gauss-7 weights.
_XK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277,
    0.381830050505119, 0.417959183673469,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])          # 15 ascending nodes
_W_KRON = np.concatenate([_WK[:-1], _WK[::-1]])
_W_GAUSS = np.zeros(15)
_W_GAUSS[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])  # Gauss points sit at the odd slots


def _gk15(f, lo, hi):
    """One Gauss--Kronrod 7/15 panel.  Returns (kronrod, |kronrod - gauss|, neval)."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    if fx.ndim == 1:
        k = half * (fx @ _W_KRON)
        g = half * (fx @ _W_GAUSS)
        return k, abs(k - g), 15
    # vector-valued integrand: components along axis 0, nodes along axis 1
    k = half * (fx @ _W_KRON)
    g = half * (fx @ _W_GAUSS)
    return k, float(np.max(np.abs(k - g))), 15


def adaptive_panels(f, lo, hi, abs_tol, max_evals=60_000, seeds=None):
    """Integrate ``f`` over [lo, hi] to absolute tolerance ``abs_tol``.

    ``f`` maps an array of abscissae to either an array of values or a
    (ncomp, nnodes) array for vector integrands.  ``seeds`` optionally
    provides initial panel breakpoints (useful for very long intervals
    where a single panel would hide structure near the left end).

    Returns (value, error_estimate, neval).
    """
    if seeds is None:
        breaks = [lo, hi]
    else:
        breaks = sorted({lo, hi, *(s for s in seeds if lo < s < hi)})
    heap = []
    total = None
    total_err = 0.0
    neval = 0
    counter = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        v, e, n = _gk15(f, a, b)
        neval += n
        total = v if total is None else total + v
        total_err += e
        counter += 1
        heapq.heappush(heap, (-e, counter, a, b, v, e))

    while total_err > abs_tol and heap:
        if neval >= max_evals:
            break
        _, _, a, b, v, e = heapq.heappop(heap)
        m = 0.5 * (a + b)
        vl, el, nl = _gk15(f, a, m)
        vr, er, nr = _gk15(f, m, b)
        neval += nl + nr
        total = total + (vl + vr - v)
        total_err += el + er - e
        for seg in ((a, m, vl, el), (m, b, vr, er)):
            counter += 1
            heapq.heappush(heap, (-seg[3], counter, seg[0], seg[1], seg[2], seg[3]))

    return total, total_err, neval


def dyadic_breakpoints(hi, first=1.0):
    """0, first, 2*first, 4*first, ... up to hi.  Panels double in width."""
    pts = [0.0]
    s = first
    while s < hi:
        pts.append(s)
        s *= 2.0
    pts.append(hi)
    return pts


class CompositeGL:
    """Fixed composite Gauss--Legendre rule on prescribed breakpoints.

    Used for evaluating the same smooth integrand at many parameter
    values simultaneously: ``nodes``/``weights`` are flat arrays, so a
    batch evaluation is one broadcasted call.
    """

    def __init__(self, breakpoints, order=24):
        xg, wg = np.polynomial.legendre.leggauss(order)
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise NumericalError("breakpoints must be strictly increasing")
        half = 0.5 * np.diff(bp)
        mid = 0.5 * (bp[:-1] + bp[1:])
        self.nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        self.weights = (half[:, None] * wg[None, :]).ravel()

    def integrate(self, values):
        """Contract pre-evaluated integrand values (..., nnodes) with the weights."""
        return np.asarray(values) @ self.weights

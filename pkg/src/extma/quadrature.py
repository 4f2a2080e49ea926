"""One-dimensional Gauss-Legendre quadrature with panel-adaptive refinement,
plus the unit-ball volume constant used by the residue normalizations.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(npts):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def fixed_gl(f, a, b, npts=32):
    """Gauss-Legendre integral of a vectorized callable on [a, b]."""
    x, w = gauss_legendre(npts)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(w * f(mid + half * x)))


def adaptive_gl(f, a, b, abs_tol=1e-12, npts=16, max_depth=48):
    """Adaptive Gauss-Legendre integration by panel bisection.

    A panel is accepted when the npts-node and 2*npts-node estimates agree
    to the panel's share of abs_tol.  f must accept an array of abscissae.
    """
    if a == b:
        return 0.0

    def panel(lo, hi, tol, depth):
        coarse = fixed_gl(f, lo, hi, npts)
        fine = fixed_gl(f, lo, hi, 2 * npts)
        if abs(fine - coarse) <= tol or depth >= max_depth:
            return fine
        mid = 0.5 * (lo + hi)
        half_tol = 0.5 * tol
        return panel(lo, mid, half_tol, depth + 1) + panel(mid, hi, half_tol, depth + 1)

    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    return sign * panel(a, b, abs_tol, 0)


def unit_ball_volume(n):
    """Volume of the unit ball in R^n: pi^(n/2) / Gamma(n/2 + 1)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_area(n, radius=1.0):
    """Surface measure of the sphere of given radius in R^n."""
    return n * unit_ball_volume(n) * radius ** (n - 1)

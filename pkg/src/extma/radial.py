"""Exact radial exterior solutions of det(D^2 u) = 1.

For radial u the operator factors as u''(u'/r)^(n-1), so det = 1 integrates
to (u')^n = r^n + a with a single mass parameter a >= 0.  These solutions
are the analytic ground truth for the flux, grid and fit modules.

Far-field quantities are evaluated through the increment
delta(s) = (s^n + a)^(1/n) - s, never by subtracting r^2/2 from u, so all
tail formulas stay accurate at radii where direct subtraction would lose
every significant digit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_gl

_QUAD_TOL = 1e-12


@dataclass(frozen=True)
class RadialExteriorSolution:
    """Radial solution on r >= r0 with u'(r) = (r^n + a)^(1/n), u(r0) = u0."""

    n: int
    a: float = 0.0
    r0: float = 1.0
    u0: float = 0.0

    def __post_init__(self):
        if not (2 <= int(self.n) <= 6):
            raise DomainError(f"dimension {self.n} outside supported range 2..6")
        if self.a < 0.0:
            raise DomainError("mass parameter a must be >= 0")
        if self.r0 <= 0.0:
            raise DomainError("inner radius r0 must be > 0")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "u0", float(self.u0))

    def _check_radius(self, r):
        if np.any(np.asarray(r) < self.r0 * (1.0 - 1e-12)):
            raise DomainError(f"radius below inner radius r0 = {self.r0}")


def _delta(sol, s):
    """(s^n + a)^(1/n) - s, stable for a*s^-n down to machine epsilon."""
    s = np.asarray(s, dtype=float)
    return s * np.expm1(np.log1p(sol.a * s ** (-sol.n)) / sol.n)


def _delta_tail(sol, s):
    """delta(s) minus its leading term (a/n) s^(1-n); this is O(s^(1-2n))."""
    s = np.asarray(s, dtype=float)
    eps = sol.a * s ** (-sol.n)
    return s * (np.expm1(np.log1p(eps) / sol.n) - eps / sol.n)


def radial_derivatives(sol: RadialExteriorSolution, r):
    """First and second radial derivatives (u', u'').

    u' = (r^n + a)^(1/n) and u'' = r^(n-1) (r^n + a)^(1/n - 1); the product
    u'' (u'/r)^(n-1) equals one identically.
    """
    sol._check_radius(r)
    r = np.asarray(r, dtype=float)
    n = sol.n
    up = (r**n + sol.a) ** (1.0 / n)
    upp = r ** (n - 1) * (r**n + sol.a) ** (1.0 / n - 1.0)
    return up, upp


@lru_cache(maxsize=4096)
def _value_increment(n, a, r0, lo, hi):
    """integral of delta over [lo, hi] for the solution (n, a, r0)."""
    sol = RadialExteriorSolution(n, a, r0, 0.0)
    return adaptive_gl(lambda s: _delta(sol, s), lo, hi, abs_tol=_QUAD_TOL)


def radial_value(sol: RadialExteriorSolution, r):
    """u(r) = u0 + integral of (s^n + a)^(1/n) from r0 to r.

    The quadratic part integrates exactly; only delta(s) goes through the
    adaptive Gauss-Legendre rule (absolute tolerance 1e-12).
    """
    sol._check_radius(r)
    r_arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r_arr).ravel()
    inc = np.array([_value_increment(sol.n, sol.a, sol.r0, sol.r0, float(s)) for s in flat])
    vals = sol.u0 + 0.5 * (flat**2 - sol.r0**2) + inc
    return float(vals[0]) if r_arr.ndim == 0 else vals.reshape(r_arr.shape)


@lru_cache(maxsize=4096)
def _tail_integral(n, a, r0, r, subtract_leading):
    """integral over [r, infinity) of delta (or delta minus leading term).

    Mapped to t in (0, 1] by s = r / t; the mapped integrand is smooth and
    vanishes fast enough at t = 0 for every supported case (n >= 3 plain,
    any n with the leading term removed).
    """
    sol = RadialExteriorSolution(n, a, r0, 0.0)
    if subtract_leading:
        g = lambda s: _delta_tail(sol, s)
    else:
        if n == 2:
            raise DomainError("plain tail integral diverges for n = 2")
        g = lambda s: _delta(sol, s)

    def mapped(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0.0
        s = r / t[pos]
        out[pos] = r * g(s) / t[pos] ** 2
        return out

    return adaptive_gl(mapped, 0.0, 1.0, abs_tol=_QUAD_TOL)


def residue_coefficient(sol: RadialExteriorSolution):
    """Coefficient d of the far-field tail: a/(n(n-2)) for n >= 3, a/2 for n = 2."""
    if sol.n == 2:
        return 0.5 * sol.a
    return sol.a / (sol.n * (sol.n - 2.0))


def expansion_constant(sol: RadialExteriorSolution):
    """Additive constant c of the far-field expansion.

    n >= 3: c = lim u(r) - r^2/2 + d r^(2-n) = u0 - r0^2/2 + int_{r0}^inf delta.
    n == 2: c = lim u(r) - r^2/2 - d log r
             = u0 - r0^2/2 - d log r0 + int_{r0}^inf (delta - d/s).
    """
    base = sol.u0 - 0.5 * sol.r0**2
    if sol.n == 2:
        d = residue_coefficient(sol)
        tail = _tail_integral(sol.n, sol.a, sol.r0, sol.r0, True)
        return base - d * np.log(sol.r0) + tail
    return base + _tail_integral(sol.n, sol.a, sol.r0, sol.r0, False)


def deviation(sol: RadialExteriorSolution, r):
    """u(r) - r^2/2 - c (n >= 3) or u(r) - r^2/2 - d log r - c (n = 2).

    Computed as minus the tail integral of delta, so it keeps full relative
    accuracy at radii where u itself is ~ r^2 / 2.
    """
    sol._check_radius(r)
    r_arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r_arr).ravel()
    if sol.n == 2:
        vals = -np.array([_tail_integral(2, sol.a, sol.r0, float(s), True) for s in flat])
    else:
        vals = -np.array(
            [_tail_integral(sol.n, sol.a, sol.r0, float(s), False) for s in flat]
        )
    return float(vals[0]) if r_arr.ndim == 0 else vals.reshape(r_arr.shape)


def deviation_after_tail(sol: RadialExteriorSolution, r):
    """Remainder after removing the d-term as well: E(r) + d r^(2-n), n >= 3.

    Equals minus the tail integral of delta_tail and is O(r^(2-2n)).
    """
    if sol.n == 2:
        raise DomainError("use deviation() for n = 2; the log model has no power tail")
    sol._check_radius(r)
    r_arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r_arr).ravel()
    vals = -np.array([_tail_integral(sol.n, sol.a, sol.r0, float(s), True) for s in flat])
    return float(vals[0]) if r_arr.ndim == 0 else vals.reshape(r_arr.shape)


def deviation_gradient_magnitude(sol: RadialExteriorSolution, r):
    """|grad(u - |x|^2/2)| = |u'(r) - r| = delta(r), exactly."""
    sol._check_radius(r)
    return np.abs(_delta(sol, np.asarray(r, dtype=float)))


def deviation_hessian_norm(sol: RadialExteriorSolution, r):
    """Spectral norm of D^2(u - |x|^2/2): max(|u'' - 1|, |u'/r - 1|), stable."""
    sol._check_radius(r)
    r = np.asarray(r, dtype=float)
    eps = sol.a * r ** (-sol.n)
    tangential = np.expm1(np.log1p(eps) / sol.n)
    radial_dir = np.expm1((1.0 - sol.n) / sol.n * np.log1p(eps))
    return np.maximum(np.abs(tangential), np.abs(radial_dir))


def radial_laplacian_deviation(sol: RadialExteriorSolution, r):
    """Laplacian of the deviation: u'' + (n-1) u'/r - n, in cancellation-free form."""
    sol._check_radius(r)
    r = np.asarray(r, dtype=float)
    eps = sol.a * r ** (-sol.n)
    lp = np.log1p(eps)
    return np.expm1((1.0 - sol.n) / sol.n * lp) + (sol.n - 1) * np.expm1(lp / sol.n)


def radial_expansion(sol: RadialExteriorSolution):
    """Far-field expansion of the radial solution: A = I, b = 0, analytic c, d.

    The tail after the d-term is O(r^(2-2n)) for every n >= 2; the n = 2
    expansion uses the log model with d = a/2.
    """
    from .fit import AsymptoticExpansion
    from .linalg import SpdUnimodular

    n = sol.n
    return AsymptoticExpansion(
        n=n,
        A=SpdUnimodular.identity(n),
        b=np.zeros(n),
        c=float(expansion_constant(sol)),
        d=float(residue_coefficient(sol)),
        dipole=np.zeros(n),
        error_order=float(2 - 2 * n),
    )

"""Scalar fields with gradients and Hessians, vectorized over point stacks.

A field is any object with attributes ``n``, ``value(X)``, ``grad(X)`` and
``hess(X)`` where X has shape (..., n).  Exterior fields also expose
``inner_radius`` (and optionally ``center``) so surface integrators can
check that quadrature nodes stay inside the domain of definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import AffineMap, QuadraticProfile
from .radial import RadialExteriorSolution, radial_derivatives, radial_value


def _norms(X):
    return np.sqrt(np.sum(X * X, axis=-1))


def as_points(X, n):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != n:
        raise DomainError(f"points have dimension {X.shape[-1]}, field has {n}")
    return X


class RadialSolutionField:
    """u(x) = U(|x - center|) for a radial exterior solution U."""

    def __init__(self, sol: RadialExteriorSolution, center=None):
        self.sol = sol
        self.n = sol.n
        self.center = np.zeros(self.n) if center is None else np.asarray(center, float)
        self.inner_radius = sol.r0

    def _radii(self, X):
        X = as_points(X, self.n) - self.center
        r = _norms(X)
        if np.any(r < self.sol.r0 * (1.0 - 1e-12)):
            raise DomainError("evaluation point inside the excluded ball")
        return X, r

    def value(self, X):
        _, r = self._radii(X)
        return radial_value(self.sol, r)

    def grad(self, X):
        Xc, r = self._radii(X)
        up, _ = radial_derivatives(self.sol, r)
        return (up / r)[..., None] * Xc

    def hess(self, X):
        Xc, r = self._radii(X)
        up, upp = radial_derivatives(self.sol, r)
        xhat = Xc / r[..., None]
        P = xhat[..., :, None] * xhat[..., None, :]
        eye = np.eye(self.n)
        t = up / r
        return upp[..., None, None] * P + t[..., None, None] * (eye - P)


class QuadraticField:
    """x'Ax/2 + b.x + c, the exact global solutions."""

    def __init__(self, profile: QuadraticProfile):
        self.profile = profile
        self.n = profile.n
        self.inner_radius = 0.0

    def value(self, X):
        return self.profile(as_points(X, self.n))

    def grad(self, X):
        X = as_points(X, self.n)
        return X @ self.profile.A.entries + self.profile.b

    def hess(self, X):
        X = as_points(X, self.n)
        return np.broadcast_to(self.profile.A.entries, X.shape[:-1] + (self.n, self.n)).copy()


class PowerPerturbedField:
    """u(x) = |x|^2/2 + coeff * |x|^(2-n): the model field of the flux expansion.

    Convex for |x|^n > (n-1)(n-2)|coeff|; evaluation below that margin is a
    domain error because the Hessian determinant loses meaning for the
    residue machinery there.
    """

    def __init__(self, n, coeff):
        if n < 3:
            raise DomainError("power-perturbed field needs n >= 3")
        self.n = int(n)
        self.coeff = float(coeff)
        self.inner_radius = ((n - 1) * (n - 2) * abs(self.coeff)) ** (1.0 / n)

    def _radii(self, X):
        X = as_points(X, self.n)
        r = _norms(X)
        if np.any(r <= self.inner_radius):
            raise DomainError("point inside the convexity margin")
        return X, r

    def value(self, X):
        X, r = self._radii(X)
        return 0.5 * r**2 + self.coeff * r ** (2.0 - self.n)

    def grad(self, X):
        X, r = self._radii(X)
        fac = 1.0 + self.coeff * (2.0 - self.n) * r ** (-float(self.n))
        return fac[..., None] * X

    def hess(self, X):
        X, r = self._radii(X)
        n = self.n
        xhat = X / r[..., None]
        P = xhat[..., :, None] * xhat[..., None, :]
        eye = np.eye(n)
        tang = 1.0 + self.coeff * (2.0 - n) * r ** (-float(n))
        rad = 1.0 + self.coeff * (2.0 - n) * (1.0 - n) * r ** (-float(n))
        return rad[..., None, None] * P + tang[..., None, None] * (eye - P)


class AffineImageField:
    """v(x) = u(Tx + shift) with det T = 1; preserves det(D^2 v) = 1."""

    def __init__(self, inner, amap: AffineMap):
        if amap.n != inner.n:
            raise DomainError("affine map dimension does not match field")
        self.inner = inner
        self.amap = amap
        self.n = inner.n
        sigma_max = np.sqrt(jac_spectral_bound(amap.T))
        self.inner_radius = getattr(inner, "inner_radius", 0.0) * sigma_max

    def value(self, X):
        return self.inner.value(self.amap(X))

    def grad(self, X):
        g = self.inner.grad(self.amap(X))
        return g @ self.amap.T

    def hess(self, X):
        H = self.inner.hess(self.amap(X))
        T = self.amap.T
        return np.einsum("ki,...kl,lj->...ij", T, H, T)


def jac_spectral_bound(T):
    """Largest eigenvalue of T'T (squared top singular value), via power iteration."""
    M = T.T @ T
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    lam = 1.0
    for _ in range(200):
        w = M @ v
        lam_new = float(np.sqrt(w @ w))
        v = w / lam_new
        if abs(lam_new - lam) <= 1e-14 * lam_new:
            break
        lam = lam_new
    return lam


@dataclass
class ValueField:
    """Plain scalar field (value only), for Kelvin-transform inputs."""

    n: int
    fn: object
    inner_radius: float = 0.0

    def value(self, X):
        return self.fn(as_points(X, self.n))


def power_decay_field(n, exponent):
    """|x|^exponent as a ValueField (harmonic for exponent = 2 - n)."""
    return ValueField(n, lambda X: _norms(X) ** float(exponent))


def dipole_field(n):
    """x_1 / |x|^n, a decaying harmonic field."""
    return ValueField(n, lambda X: X[..., 0] / _norms(X) ** float(n))

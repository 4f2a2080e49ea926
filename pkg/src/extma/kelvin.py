"""Kelvin transform utilities and numerical checks of the exterior-to-ball
machinery: decay of the quadratic deviation, the linearized coefficient
identity, the transformed Laplace equation, and the flux-integral limit
that pins the residue to the tail coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fields import PowerPerturbedField, ValueField, as_points
from .flux import FluxField, psi, residue_normalization
from .quadrature import gauss_legendre
from .radial import (
    RadialExteriorSolution,
    deviation,
    deviation_gradient_magnitude,
    deviation_hessian_norm,
    residue_coefficient,
)
from .surfaces import sphere


def loglog_slope(radii, values):
    """Least-squares slope of log|values| against log(radii).

    Returns (slope, stderr).  Values at or below 1e-300 are rejected since
    they carry no decay information.
    """
    r = np.asarray(radii, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v <= 1e-300):
        raise DomainError("cannot fit a decay order through zero values")
    x = np.log(r)
    y = np.log(v)
    xm = x - x.mean()
    slope = float((xm @ (y - y.mean())) / (xm @ xm))
    resid = y - (y.mean() + slope * xm)
    dof = max(len(r) - 2, 1)
    stderr = float(np.sqrt((resid @ resid) / dof / (xm @ xm)))
    return slope, stderr


class KelvinField:
    """|x|^(2-n) E(x / |x|^2): exchanges infinity and the origin."""

    def __init__(self, inner, n, domain_kind, domain_radius):
        self.inner = inner
        self.n = int(n)
        self.domain_kind = domain_kind
        self.domain_radius = float(domain_radius)

    def value(self, X):
        X = as_points(X, self.n)
        r2 = np.sum(X * X, axis=-1)
        if np.any(r2 == 0.0):
            raise DomainError("Kelvin transform undefined at the origin")
        r = np.sqrt(r2)
        if self.domain_kind == "punctured_ball":
            if np.any(r >= self.domain_radius):
                raise DomainError("point outside the transformed ball")
        else:
            if np.any(r <= self.domain_radius):
                raise DomainError("point inside the excluded ball")
        inner_val = self.inner.value(X / r2[..., None])
        return r ** (2.0 - self.n) * inner_val


def kelvin_transform(E, n=None):
    """Kelvin transform of a scalar field.

    Exterior fields (defined on |x| > R0) map to fields on the punctured
    ball of radius 1/R0 and vice versa; applying the transform twice gives
    back the original field on the common domain.
    """
    if n is None:
        n = E.n
    kind = getattr(E, "domain_kind", "exterior")
    if kind == "exterior":
        r0 = float(getattr(E, "inner_radius", 0.0))
        radius = np.inf if r0 == 0.0 else 1.0 / r0
        return KelvinField(E, n, "punctured_ball", radius)
    return KelvinField(E, n, "exterior", 1.0 / E.domain_radius)


def fd_laplacian(fn, X, h):
    """Central-difference Laplacian of a value callable at points X."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    total = -2.0 * n * np.asarray(fn(X), dtype=float)
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        total = total + np.asarray(fn(X + step), dtype=float)
        total = total + np.asarray(fn(X - step), dtype=float)
    return total / h**2


def verify_kelvin_laplace_identity(E, g, sample_points, h, n=None):
    """Check Laplacian(K[E]) = |x|^(-2-n) g(x/|x|^2) by central differences.

    g must be the exterior Laplacian of E.  Runs the stencil at steps h and
    h/2 and reports the maximum deviation at each step together with the
    observed convergence order.
    """
    if n is None:
        n = E.n
    KE = kelvin_transform(E, n)
    X = as_points(sample_points, n)
    r2 = np.sum(X * X, axis=-1)
    r = np.sqrt(r2)
    if np.any(r == 0.0):
        raise DomainError("sample point at the origin")
    if KE.domain_kind == "punctured_ball" and np.any(r + 2 * h >= KE.domain_radius):
        raise DomainError("stencil leaves the transformed ball; shrink h or the radii")
    g_vals = np.asarray(g(X / r2[..., None]), dtype=float)
    target = r ** (-2.0 - n) * g_vals

    devs = {}
    for step in (h, 0.5 * h):
        lap = fd_laplacian(KE.value, X, step)
        devs[step] = float(np.max(np.abs(lap - target)))
    order = float(np.log2(devs[h] / devs[0.5 * h])) if devs[0.5 * h] > 0 else np.inf
    return {
        "h": h,
        "max_dev_h": devs[h],
        "max_dev_h2": devs[0.5 * h],
        "observed_order": order,
        "points": int(X.reshape(-1, n).shape[0]),
    }


def _det_root_inverse(M, n):
    """F_xi(M) = (1/n) det(M)^(1/n) M^(-1) for symmetric positive definite M."""
    det = np.linalg.det(M)
    return (det ** (1.0 / n) / n)[..., None, None] * np.linalg.inv(M)


def linearized_coefficients(hess_dev, n, s_nodes=16):
    """a(x) = integral over s in [0,1] of F_xi(I + s D^2E(x)), 16-node Gauss-Legendre.

    hess_dev is a stack (..., n, n) of Hessian deviations D^2E = D^2u - I.
    The segment I + s D^2E stays positive definite whenever D^2u is, so the
    integrand is smooth along the whole path.
    """
    xg, wg = gauss_legendre(s_nodes)
    s = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    eye = np.eye(n)
    out = np.zeros_like(hess_dev)
    for sk, wk in zip(s, w):
        out = out + wk * _det_root_inverse(eye + sk * hess_dev, n)
    return out


@dataclass
class LinearizedCoefficients:
    """Per-point coefficient matrices with their deviation-from-identity bound."""

    points: np.ndarray
    a: np.ndarray
    residuals: np.ndarray
    deviation_bound: float
    max_residual: float


def verify_linearization(u_field, sample_points):
    """Coefficients a(x) of the linearized equation and their two contracts.

    Checks that sum_ij a_ij D_ij E vanishes (it telescopes the determinant
    identity along the segment) and measures C = max |a - I| * |x|^n.
    """
    X = as_points(sample_points, u_field.n)
    n = u_field.n
    H = u_field.hess(X)
    ev = np.linalg.eigvalsh(H)
    if np.any(ev[..., 0] <= 0.0):
        raise DomainError("Hessian not positive definite at a sample point")
    hess_dev = H - np.eye(n)
    a = linearized_coefficients(hess_dev, n)
    residuals = np.abs(np.einsum("...ij,...ij->...", a, hess_dev))
    r = np.sqrt(np.sum(X * X, axis=-1))
    dev = np.max(np.abs(a - np.eye(n)), axis=(-2, -1))
    return LinearizedCoefficients(
        points=X,
        a=a,
        residuals=residuals,
        deviation_bound=float(np.max(dev * r**n)),
        max_residual=float(np.max(residuals)),
    )


@dataclass
class ErrorProfile:
    """Fitted decay exponents of the deviation from the quadratic part."""

    radii: np.ndarray
    value_samples: np.ndarray
    grad_samples: np.ndarray
    hess_samples: np.ndarray
    decay_order_value: float
    decay_order_grad: float
    decay_order_hess: float
    stderrs: dict = field(default_factory=dict)

    def orders(self):
        return (self.decay_order_value, self.decay_order_grad, self.decay_order_hess)


def radial_error_profile(sol: RadialExteriorSolution, radii):
    """Decay profile of E = u - |x|^2/2 (c removed) for a radial solution.

    All three magnitudes come from cancellation-free closed forms, so the
    fitted slopes are exact up to the least-squares model error.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0.0):
        raise DomainError("fitting radii must be strictly increasing")
    ev = np.abs(deviation(sol, radii))
    gv = deviation_gradient_magnitude(sol, radii)
    hv = deviation_hessian_norm(sol, radii)
    so_v, se_v = loglog_slope(radii, ev)
    so_g, se_g = loglog_slope(radii, gv)
    so_h, se_h = loglog_slope(radii, hv)
    return ErrorProfile(
        radii=radii,
        value_samples=ev,
        grad_samples=gv,
        hess_samples=hv,
        decay_order_value=so_v,
        decay_order_grad=so_g,
        decay_order_hess=so_h,
        stderrs={"value": se_v, "grad": se_g, "hess": se_h},
    )


def source_decay_order(u_field, radii, directions):
    """Fitted decay order of g = sum_ij (delta_ij - a_ij) D_ij E.

    Evaluates the contraction at |x| = r along the given unit directions and
    fits the slope of the per-radius maximum.  The contraction form keeps
    full accuracy because the O(1) parts cancel analytically inside a and
    D^2E before any multiplication happens.
    """
    radii = np.asarray(radii, dtype=float)
    dirs = np.asarray(directions, dtype=float)
    n = u_field.n
    per_radius = []
    for r in radii:
        X = r * dirs
        hess_dev = u_field.hess(X) - np.eye(n)
        a = linearized_coefficients(hess_dev, n)
        g = np.einsum("...ij,...ij->...", np.eye(n) - a, hess_dev)
        per_radius.append(float(np.max(np.abs(g))))
    slope, stderr = loglog_slope(radii, per_radius)
    return {"radii": radii.tolist(), "g_max": per_radius, "order": slope, "stderr": stderr}


def convexity_margin(n, c_tilde):
    """Radius above which |x|^2/2 + c_tilde |x|^(2-n) is uniformly convex."""
    return ((n - 1) * (n - 2) * abs(c_tilde)) ** (1.0 / n)


def verify_flux_expansion(c_tilde, n, radii, rule=None):
    """Flux integral of the model field u = |x|^2/2 + c_tilde |x|^(2-n).

    At each radius this evaluates the integrand sum_j u_1 cof_1j x_j exactly
    (pointwise comparison against x_1^2 (1 - c_tilde n (n-2) r^-n)) and the
    normalized surface integral, which must approach -c_tilde with the
    deviation shrinking at least like 1/r.
    """
    if n < 3:
        raise DomainError("the power-tail flux expansion needs n >= 3")
    radii = np.asarray(radii, dtype=float)
    margin = convexity_margin(n, c_tilde)
    if np.any(radii <= margin):
        raise DomainError(f"radius below the convexity margin {margin:.3f}")

    u = PowerPerturbedField(n, c_tilde)
    fl = FluxField(u, "x1e1")
    norm = residue_normalization(n)
    integral_values = []
    pointwise_dev = []
    for r in radii:
        surf = sphere(r, n=n, rule=rule)
        pts, _, wts = surf.nodes()
        integrand = np.sum(psi(fl, pts) * pts, axis=-1)
        expected = pts[..., 0] ** 2 * (1.0 - c_tilde * n * (n - 2) * r ** (-float(n)))
        pointwise_dev.append(float(np.max(np.abs(integrand - expected))))
        integral = float(np.sum(wts * (integrand - pts[..., 0] ** 2)))
        integral_values.append(norm * integral / r)

    integral_dev = np.abs(np.asarray(integral_values) - (-c_tilde))
    report = {
        "c_tilde": float(c_tilde),
        "n": int(n),
        "radii": radii.tolist(),
        "integral_values": [float(v) for v in integral_values],
        "integral_deviations": [float(v) for v in integral_dev],
        "pointwise_max_dev": [float(v) for v in pointwise_dev],
    }
    floor = 1e-13 * max(abs(c_tilde), 1.0)
    if np.all(integral_dev <= floor) and np.all(np.asarray(pointwise_dev) <= floor):
        report.update({"pointwise_order": None, "integral_order": None, "pass": True})
        return report
    pw_order, _ = loglog_slope(radii, np.maximum(pointwise_dev, floor))
    int_order, _ = loglog_slope(radii, np.maximum(integral_dev, floor))
    # "or better": pointwise deviation within O(r^(1-n)), integral within O(1/r)
    ok = pw_order <= (1.0 - n) + 0.3 and int_order <= -1.0 + 0.3
    report.update({"pointwise_order": pw_order, "integral_order": int_order, "pass": bool(ok)})
    return report


def removability_limit(sol: RadialExteriorSolution, exponents=(2, 3, 4, 5), direction=None):
    """Values of K[E] at |x| = 10^-k: they must approach -d continuously."""
    n = sol.n
    if direction is None:
        direction = np.zeros(n)
        direction[0] = 1.0
    vals = []
    for k in exponents:
        x = (10.0 ** (-k)) * np.asarray(direction, dtype=float)
        r = float(np.linalg.norm(x))
        big = 1.0 / r
        vals.append(float(r ** (2.0 - n) * deviation(sol, big)))
    return {
        "exponents": list(exponents),
        "values": vals,
        "limit": -residue_coefficient(sol),
    }


def exterior_deviation_field(sol: RadialExteriorSolution):
    """E = u - |x|^2/2 - c as a value field on the exterior domain."""

    def fn(X):
        r = np.sqrt(np.sum(np.asarray(X, float) ** 2, axis=-1))
        return deviation(sol, r)

    return ValueField(sol.n, fn, inner_radius=sol.r0)

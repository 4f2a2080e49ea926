"""Closed surfaces enclosing the excluded set, with quadrature rules.

Each surface produces (points, outward normals, weights) such that
sum(w_i f(x_i) . n_i) approximates the flux integral.  Node placement is
deterministic: trapezoid rules on periodic parameters, Gauss-Legendre on
open ones, and a seeded scrambled Sobol sequence on spheres in n >= 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .quadrature import gauss_legendre, sphere_area

# fixed irrational phase for periodic rules: shift-invariant for smooth
# integrands, but keeps the nodes incommensurate with any uniform grid an
# interpolated field may live on (systematic interpolation-error sampling
# would otherwise survive the angular average)
_GOLDEN_PHASE = 0.3819660112501051


@dataclass(frozen=True)
class SurfaceSpec:
    """Sphere, ellipsoid or axis-aligned box boundary in R^n.

    extent: radius (sphere), semi-axes (ellipsoid) or half-widths (box).
    rule: node counts per parameter direction; None picks the default for
    the surface kind and dimension.
    """

    kind: str
    center: np.ndarray
    extent: np.ndarray
    rule: tuple = None
    qmc_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sphere", "ellipsoid", "box"):
            raise DomainError(f"unknown surface kind {self.kind!r}")
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        extent = np.atleast_1d(np.asarray(self.extent, dtype=float))
        n = center.shape[0]
        if self.kind == "sphere" and extent.shape[0] == 1:
            extent = np.full(n, extent[0])
        if extent.shape[0] != n:
            raise DomainError("extent length does not match center dimension")
        if np.any(extent <= 0.0):
            raise DomainError("surface extents must be positive")
        if self.kind == "sphere" and not np.allclose(extent, extent[0]):
            raise DomainError("sphere requires equal extents; use an ellipsoid")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "extent", extent)
        if self.rule is not None:
            object.__setattr__(self, "rule", tuple(int(k) for k in self.rule))

    @property
    def n(self):
        return self.center.shape[0]

    @property
    def radius(self):
        return float(self.extent[0])

    def default_rule(self):
        n = self.n
        if self.kind in ("sphere", "ellipsoid"):
            if n == 2:
                return (256,)
            if n == 3:
                return (64, 128)
            if self.kind == "sphere":
                return (16,)  # log2(points) for the Sobol rule
            raise DomainError("ellipsoid quadrature is implemented for n <= 3 only")
        if n == 2:
            return (64,)
        if n == 3:
            return (32, 32)
        raise DomainError("box quadrature is implemented for n <= 3 only")

    def with_rule(self, rule):
        return replace(self, rule=tuple(rule))

    def refined(self):
        """Same surface with every node count doubled (log2 + 1 for Sobol)."""
        rule = self.rule or self.default_rule()
        if self.kind == "sphere" and self.n >= 4:
            return self.with_rule((rule[0] + 1,))
        return self.with_rule(tuple(2 * k for k in rule))

    def encloses_ball(self, radius, center=None):
        """Conservative check that the ball (center, radius) lies strictly inside."""
        c = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)
        off = float(np.linalg.norm(c - self.center))
        if self.kind in ("sphere", "ellipsoid"):
            return off + radius < float(self.extent.min())
        return bool(np.all(np.abs(c - self.center) + radius < self.extent))

    def nodes(self):
        """Quadrature points, outward unit normals and weights."""
        rule = self.rule or self.default_rule()
        if self.kind in ("sphere", "ellipsoid"):
            if self.n == 2:
                return _ellipse_nodes(self.center, self.extent, rule[0])
            if self.n == 3:
                return _ellipsoid_nodes(self.center, self.extent, rule[0], rule[1])
            return _sphere_qmc_nodes(self.center, self.radius, rule[0], self.qmc_seed)
        if self.n == 2:
            return _box_nodes_2d(self.center, self.extent, rule[0])
        return _box_nodes_3d(self.center, self.extent, rule[0], rule[1])

    def describe(self):
        rule = self.rule or self.default_rule()
        return {
            "kind": self.kind,
            "center": [float(v) for v in self.center],
            "extent": [float(v) for v in self.extent],
            "rule": [int(k) for k in rule],
        }


def sphere(radius, center=None, n=None, rule=None, qmc_seed=0):
    if center is None:
        if n is None:
            raise DomainError("sphere() needs either a center or a dimension")
        center = np.zeros(n)
    return SurfaceSpec("sphere", center, [float(radius)], rule, qmc_seed)


def ellipsoid(semi_axes, center=None, rule=None):
    semi_axes = np.asarray(semi_axes, dtype=float)
    if center is None:
        center = np.zeros(semi_axes.shape[0])
    return SurfaceSpec("ellipsoid", center, semi_axes, rule)


def box(half_widths, center=None, rule=None):
    half_widths = np.asarray(half_widths, dtype=float)
    if center is None:
        center = np.zeros(half_widths.shape[0])
    return SurfaceSpec("box", center, half_widths, rule)


def _ellipse_nodes(center, axes, count):
    t = 2.0 * np.pi * (np.arange(count) + _GOLDEN_PHASE) / count
    ct, st = np.cos(t), np.sin(t)
    pts = center + np.stack([axes[0] * ct, axes[1] * st], axis=-1)
    raw_normal = np.stack([axes[1] * ct, axes[0] * st], axis=-1)
    speed = np.sqrt(np.sum(raw_normal * raw_normal, axis=-1))
    normals = raw_normal / speed[:, None]
    weights = speed * (2.0 * np.pi / count)
    return pts, normals, weights


def _ellipsoid_nodes(center, axes, n_polar, n_azimuth):
    xg, wg = gauss_legendre(n_polar)
    theta = 0.5 * np.pi * (xg + 1.0)
    wt = 0.5 * np.pi * wg
    phi = 2.0 * np.pi * (np.arange(n_azimuth) + _GOLDEN_PHASE) / n_azimuth
    wp = 2.0 * np.pi / n_azimuth
    T, P = np.meshgrid(theta, phi, indexing="ij")
    st, ct = np.sin(T), np.cos(T)
    sp, cp = np.sin(P), np.cos(P)
    pts = center + np.stack(
        [axes[0] * st * cp, axes[1] * st * sp, axes[2] * ct], axis=-1
    ).reshape(-1, 3)
    raw = np.stack(
        [axes[1] * axes[2] * st**2 * cp, axes[0] * axes[2] * st**2 * sp, axes[0] * axes[1] * st * ct],
        axis=-1,
    ).reshape(-1, 3)
    mag = np.sqrt(np.sum(raw * raw, axis=-1))
    normals = raw / mag[:, None]
    param_w = np.broadcast_to(wt[:, None] * wp, T.shape).ravel()
    weights = mag * param_w
    return pts, normals, weights


def _sphere_qmc_nodes(center, radius, log2_count, seed):
    from scipy.stats import norm, qmc

    n = center.shape[0]
    count = 2**log2_count
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    u = sob.random(count)
    z = norm.ppf(np.clip(u, 1e-15, 1.0 - 1e-15))
    z /= np.sqrt(np.sum(z * z, axis=-1))[:, None]
    pts = center + radius * z
    weights = np.full(count, sphere_area(n, radius) / count)
    return pts, z, weights


def _box_nodes_2d(center, half, count):
    xg, wg = gauss_legendre(count)
    pts, normals, weights = [], [], []
    for axis in range(2):
        other = 1 - axis
        for sgn in (-1.0, 1.0):
            p = np.zeros((count, 2))
            p[:, axis] = sgn * half[axis]
            p[:, other] = half[other] * xg
            nrm = np.zeros((count, 2))
            nrm[:, axis] = sgn
            pts.append(center + p)
            normals.append(nrm)
            weights.append(half[other] * wg)
    return np.concatenate(pts), np.concatenate(normals), np.concatenate(weights)


def _box_nodes_3d(center, half, c1, c2):
    x1, w1 = gauss_legendre(c1)
    x2, w2 = gauss_legendre(c2)
    pts, normals, weights = [], [], []
    for axis in range(3):
        o1, o2 = [k for k in range(3) if k != axis]
        A, B = np.meshgrid(x1, x2, indexing="ij")
        WA, WB = np.meshgrid(w1, w2, indexing="ij")
        for sgn in (-1.0, 1.0):
            p = np.zeros(A.shape + (3,))
            p[..., axis] = sgn * half[axis]
            p[..., o1] = half[o1] * A
            p[..., o2] = half[o2] * B
            nrm = np.zeros(A.shape + (3,))
            nrm[..., axis] = sgn
            pts.append((center + p).reshape(-1, 3))
            normals.append(nrm.reshape(-1, 3))
            weights.append((half[o1] * half[o2] * WA * WB).ravel())
    return np.concatenate(pts), np.concatenate(normals), np.concatenate(weights)

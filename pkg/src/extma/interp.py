"""Bicubic/tricubic interpolation of grid solutions with exact chain rule
to Cartesian derivatives.

The cubic patches give O(h^4) values, O(h^3) gradients and O(h^2) Hessians
on smooth fields; Hessians of grid-backed fields always come from here
rather than from re-differencing interpolated values.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DomainError


def _locate_axis(coord, origin, step, count, periodic):
    s = (coord - origin) / step
    if periodic:
        cell = np.floor(s).astype(np.int64) % count
        return cell, s - np.floor(s)
    cell = np.floor(s).astype(np.int64)
    return cell, s - cell


def _locate(grid, X):
    X = np.asarray(X, dtype=float)
    q = grid.to_grid_coords(X)
    r = q[0]
    lo, hi = grid.interpolation_bounds()
    if np.any(r < lo - 1e-12) or np.any(r > hi + 1e-12):
        raise DomainError(
            f"interpolation point outside the one-cell margin [{lo:.6g}, {hi:.6g}]"
        )
    res = grid.resolution
    s = (r - grid.inner_radius) / grid.hr
    i0 = np.clip(np.floor(s).astype(np.int64), 1, res - 3)
    xi_r = s - i0
    if grid.n == 2:
        j0, xi_t = _locate_axis(q[1], 0.0, grid.ht, res, periodic=True)
        return (i0 - 1, j0 + 1), (xi_r, xi_t)
    st = q[1] / grid.ht - 0.5
    j0 = np.floor(st).astype(np.int64)
    xi_t = st - j0
    k0, xi_p = _locate_axis(q[2], 0.0, grid.hp, res, periodic=True)
    return (i0 - 1, j0 + 1, k0 + 1), (xi_r, xi_t, xi_p)


def _frame_2d(X):
    r = np.hypot(X[..., 0], X[..., 1])
    ct = X[..., 0] / r
    st = X[..., 1] / r
    rhat = np.stack([ct, st], axis=-1)
    that = np.stack([-st, ct], axis=-1)
    Q = np.stack([rhat, that], axis=-1)
    return r, Q


def _frame_3d(X):
    r = np.sqrt(np.sum(X * X, axis=-1))
    ct = np.clip(X[..., 2] / r, -1.0, 1.0)
    stheta = np.sqrt(np.maximum(1.0 - ct * ct, 1e-300))
    rho = np.hypot(X[..., 0], X[..., 1])
    safe = np.where(rho > 0.0, rho, 1.0)
    cp = np.where(rho > 0.0, X[..., 0] / safe, 1.0)
    sp = np.where(rho > 0.0, X[..., 1] / safe, 0.0)
    rhat = np.stack([stheta * cp, stheta * sp, ct], axis=-1)
    that = np.stack([ct * cp, ct * sp, -stheta], axis=-1)
    phat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    Q = np.stack([rhat, that, phat], axis=-1)
    return r, stheta, ct, Q


def grid_to_cartesian(grid, X, grid_grad, grid_hess):
    """Convert grid-coordinate derivatives at points X to Cartesian ones.

    Uses H_x = Q S (H_q - G) S Q' where G collects the frame-curvature
    terms and S rescales angle derivatives by the metric factors.
    """
    X = np.asarray(X, dtype=float)
    if grid.n == 2:
        r, Q = _frame_2d(X)
        g_r = grid_grad[..., 0]
        g_t = grid_grad[..., 1] / r
        gx = np.einsum("...ij,...j->...i", Q, np.stack([g_r, g_t], axis=-1))
        M = np.empty(X.shape[:-1] + (2, 2))
        M[..., 0, 0] = grid_hess[..., 0, 0]
        M[..., 0, 1] = M[..., 1, 0] = (grid_hess[..., 0, 1] - g_t) / r
        M[..., 1, 1] = (grid_hess[..., 1, 1] + r * g_r) / r**2
        Hx = np.einsum("...ik,...kl,...jl->...ij", Q, M, Q)
        return gx, Hx
    r, s, c, Q = _frame_3d(X)
    g_r = grid_grad[..., 0]
    g_t = grid_grad[..., 1] / r
    g_p = grid_grad[..., 2] / (r * s)
    gx = np.einsum("...ij,...j->...i", Q, np.stack([g_r, g_t, g_p], axis=-1))
    M = np.empty(X.shape[:-1] + (3, 3))
    M[..., 0, 0] = grid_hess[..., 0, 0]
    M[..., 0, 1] = M[..., 1, 0] = (grid_hess[..., 0, 1] - g_t) / r
    M[..., 0, 2] = M[..., 2, 0] = (grid_hess[..., 0, 2] - s * g_p) / (r * s)
    M[..., 1, 1] = (grid_hess[..., 1, 1] + r * g_r) / r**2
    M[..., 1, 2] = M[..., 2, 1] = (grid_hess[..., 1, 2] - r * c * g_p) / (r**2 * s)
    M[..., 2, 2] = (grid_hess[..., 2, 2] + r * s * (s * g_r + c * g_t)) / (r * s) ** 2
    Hx = np.einsum("...ik,...kl,...jl->...ij", Q, M, Q)
    return gx, Hx


def interpolate(solution, X):
    """(value, gradient, Hessian) of a grid solution at Cartesian points.

    Points must respect the one-cell radial margin of the grid.
    """
    grid = solution.grid
    X = np.asarray(X, dtype=float)
    scalar = X.ndim == 1
    pts = np.atleast_2d(X)
    starts, xis = _locate(grid, pts)
    upad = solution.padded_values(width=2)
    if grid.n == 2:
        val, dq, ddq = kernels.patch_eval_2d(
            upad, starts[0], starts[1], xis[0], xis[1], grid.hr, grid.ht
        )
    else:
        val, dq, ddq = kernels.patch_eval_3d(
            upad, starts[0], starts[1], starts[2],
            xis[0], xis[1], xis[2], grid.hr, grid.ht, grid.hp,
        )
    gx, Hx = grid_to_cartesian(grid, pts, dq, ddq)
    if scalar:
        return float(val[0]), gx[0], Hx[0]
    shape = X.shape[:-1]
    return val.reshape(shape), gx.reshape(shape + (grid.n,)), Hx.reshape(shape + (grid.n, grid.n))


class GridField:
    """Field view of a grid solution (value/grad/hess via interpolation)."""

    def __init__(self, solution):
        self.solution = solution
        self.n = solution.grid.n
        self.inner_radius = solution.grid.interpolation_bounds()[0]

    def value(self, X):
        return interpolate(self.solution, X)[0]

    def grad(self, X):
        return interpolate(self.solution, X)[1]

    def hess(self, X):
        return interpolate(self.solution, X)[2]

"""Vectorized-numpy assembly of the discrete Hessian-determinant residual
and its Jacobian stencil values on annular grids.

The Cartesian Hessian at a node is Q Mt Q' with Q the local orthonormal
frame and Mt the scaled covariant matrix built from grid-coordinate
derivatives, so det(D^2 u) = det(Mt) and the cofactor algebra needed for
the Jacobian also happens entirely in the grid frame.
"""

from __future__ import annotations

import numpy as np

N_OFF_2D = 9
N_OFF_3D = 19


def _derivs_2d(upad, hr, ht):
    """Centered grid-coordinate derivatives at interior nodes (slices of upad)."""
    c = upad[1:-1, 1:-1]
    rp = upad[2:, 1:-1]
    rm = upad[:-2, 1:-1]
    tp = upad[1:-1, 2:]
    tm = upad[1:-1, :-2]
    u_r = (rp - rm) / (2.0 * hr)
    u_rr = (rp - 2.0 * c + rm) / hr**2
    u_t = (tp - tm) / (2.0 * ht)
    u_tt = (tp - 2.0 * c + tm) / ht**2
    u_rt = (upad[2:, 2:] - upad[2:, :-2] - upad[:-2, 2:] + upad[:-2, :-2]) / (4.0 * hr * ht)
    return u_r, u_rr, u_t, u_tt, u_rt


def assemble_2d(upad, r, hr, ht, want_jac):
    """Residual det - 1, Jacobian stencil values, and a positivity flag.

    upad: (Nr, Nt+2) padded values; r: (Nr,) radii.
    Returns (F, vals, pd_ok) with F of shape (Nr-2, Nt) and vals of shape
    (Nr-2, Nt, 9) (empty when want_jac is false).
    """
    u_r, u_rr, u_t, u_tt, u_rt = _derivs_2d(upad, hr, ht)
    R = r[1:-1, None]

    m00 = u_rr
    m01 = (u_rt - u_t / R) / R
    m11 = u_tt / R**2 + u_r / R
    det = m00 * m11 - m01 * m01
    F = det - 1.0
    pd_ok = bool(np.all(m00 > 0.0) and np.all(det > 0.0))

    if not want_jac:
        return F, np.empty((F.shape[0], F.shape[1], 0)), pd_ok

    c_rr = m11
    c_rt = -2.0 * m01 / R
    c_tt = m00 / R**2
    c_r = m00 / R
    c_t = 2.0 * m01 / R**2

    vals = np.empty(F.shape + (N_OFF_2D,))
    vals[..., 0] = -2.0 * (c_rr / hr**2 + c_tt / ht**2)
    vals[..., 1] = c_rr / hr**2 + c_r / (2.0 * hr)
    vals[..., 2] = c_rr / hr**2 - c_r / (2.0 * hr)
    vals[..., 3] = c_tt / ht**2 + c_t / (2.0 * ht)
    vals[..., 4] = c_tt / ht**2 - c_t / (2.0 * ht)
    mixed = c_rt / (4.0 * hr * ht)
    vals[..., 5] = mixed
    vals[..., 6] = -mixed
    vals[..., 7] = -mixed
    vals[..., 8] = mixed
    return F, vals, pd_ok


def _derivs_3d(upad, hr, ht, hp):
    c = upad[1:-1, 1:-1, 1:-1]
    rp = upad[2:, 1:-1, 1:-1]
    rm = upad[:-2, 1:-1, 1:-1]
    tp = upad[1:-1, 2:, 1:-1]
    tm = upad[1:-1, :-2, 1:-1]
    pp = upad[1:-1, 1:-1, 2:]
    pm = upad[1:-1, 1:-1, :-2]
    u_r = (rp - rm) / (2.0 * hr)
    u_rr = (rp - 2.0 * c + rm) / hr**2
    u_t = (tp - tm) / (2.0 * ht)
    u_tt = (tp - 2.0 * c + tm) / ht**2
    u_p = (pp - pm) / (2.0 * hp)
    u_pp = (pp - 2.0 * c + pm) / hp**2
    u_rt = (upad[2:, 2:, 1:-1] - upad[2:, :-2, 1:-1] - upad[:-2, 2:, 1:-1] + upad[:-2, :-2, 1:-1]) / (4.0 * hr * ht)
    u_rp = (upad[2:, 1:-1, 2:] - upad[2:, 1:-1, :-2] - upad[:-2, 1:-1, 2:] + upad[:-2, 1:-1, :-2]) / (4.0 * hr * hp)
    u_tp = (upad[1:-1, 2:, 2:] - upad[1:-1, 2:, :-2] - upad[1:-1, :-2, 2:] + upad[1:-1, :-2, :-2]) / (4.0 * ht * hp)
    return u_r, u_rr, u_t, u_tt, u_p, u_pp, u_rt, u_rp, u_tp


def assemble_3d(upad, r, sin_t, cos_t, hr, ht, hp, want_jac):
    """3D analogue of assemble_2d on the spherical grid.

    upad: (Nr, Nt+2, Np+2); r: (Nr,); sin_t/cos_t: (Nt,).
    Returns (F, vals, pd_ok) with vals of shape (Nr-2, Nt, Np, 19).
    """
    u_r, u_rr, u_t, u_tt, u_p, u_pp, u_rt, u_rp, u_tp = _derivs_3d(upad, hr, ht, hp)
    R = r[1:-1, None, None]
    S = sin_t[None, :, None]
    C = cos_t[None, :, None]

    g_t = u_t / R
    g_p = u_p / (R * S)

    m00 = u_rr
    m01 = (u_rt - g_t) / R
    m02 = (u_rp - S * g_p) / (R * S)
    m11 = (u_tt + R * u_r) / R**2
    m12 = (u_tp - R * C * g_p) / (R**2 * S)
    m22 = (u_pp + R * S * (S * u_r + C * g_t)) / (R * S) ** 2

    c00 = m11 * m22 - m12 * m12
    c01 = m02 * m12 - m01 * m22
    c02 = m01 * m12 - m02 * m11
    c11 = m00 * m22 - m02 * m02
    c12 = m02 * m01 - m00 * m12
    c22 = m00 * m11 - m01 * m01

    det = m00 * c00 + m01 * c01 + m02 * c02
    F = det - 1.0
    pd_ok = bool(np.all(m00 > 0.0) and np.all(c22 > 0.0) and np.all(det > 0.0))

    if not want_jac:
        return F, np.empty(F.shape + (0,)), pd_ok

    C00 = c00
    C01 = c01 / R
    C02 = c02 / (R * S)
    C11 = c11 / R**2
    C12 = c12 / (R**2 * S)
    C22 = c22 / (R * S) ** 2

    c_rr = C00
    c_tt = C11
    c_pp = C22
    c_rt = 2.0 * C01
    c_rp = 2.0 * C02
    c_tp = 2.0 * C12
    c_r = R * C11 + R * S**2 * C22
    c_t = -2.0 * C01 / R + S * C * C22
    c_p = -2.0 * C02 / R - 2.0 * (C / S) * C12

    vals = np.empty(F.shape + (N_OFF_3D,))
    vals[..., 0] = -2.0 * (c_rr / hr**2 + c_tt / ht**2 + c_pp / hp**2)
    vals[..., 1] = c_rr / hr**2 + c_r / (2.0 * hr)
    vals[..., 2] = c_rr / hr**2 - c_r / (2.0 * hr)
    vals[..., 3] = c_tt / ht**2 + c_t / (2.0 * ht)
    vals[..., 4] = c_tt / ht**2 - c_t / (2.0 * ht)
    vals[..., 5] = c_pp / hp**2 + c_p / (2.0 * hp)
    vals[..., 6] = c_pp / hp**2 - c_p / (2.0 * hp)
    mrt = c_rt / (4.0 * hr * ht)
    vals[..., 7] = mrt
    vals[..., 8] = -mrt
    vals[..., 9] = -mrt
    vals[..., 10] = mrt
    mrp = c_rp / (4.0 * hr * hp)
    vals[..., 11] = mrp
    vals[..., 12] = -mrp
    vals[..., 13] = -mrp
    vals[..., 14] = mrp
    mtp = c_tp / (4.0 * ht * hp)
    vals[..., 15] = mtp
    vals[..., 16] = -mtp
    vals[..., 17] = -mtp
    vals[..., 18] = mtp
    return F, vals, pd_ok

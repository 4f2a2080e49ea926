"""Numba-compiled twin of stencil_numpy: same residual/Jacobian contract,
loop nests instead of array slices.  Disk-cached so repeated runs skip the
JIT compile.
"""

from __future__ import annotations

import numpy as np
from numba import njit

N_OFF_2D = 9
N_OFF_3D = 19


@njit(cache=True)
def assemble_2d(upad, r, hr, ht, want_jac):
    nr = upad.shape[0]
    nt = upad.shape[1] - 2
    F = np.empty((nr - 2, nt))
    vals = np.empty((nr - 2, nt, N_OFF_2D if want_jac else 0))
    pd_ok = True
    for i in range(1, nr - 1):
        R = r[i]
        for j in range(nt):
            jp = j + 1
            c = upad[i, jp]
            rp = upad[i + 1, jp]
            rm = upad[i - 1, jp]
            tp = upad[i, jp + 1]
            tm = upad[i, jp - 1]
            u_r = (rp - rm) / (2.0 * hr)
            u_rr = (rp - 2.0 * c + rm) / hr**2
            u_t = (tp - tm) / (2.0 * ht)
            u_tt = (tp - 2.0 * c + tm) / ht**2
            u_rt = (
                upad[i + 1, jp + 1] - upad[i + 1, jp - 1]
                - upad[i - 1, jp + 1] + upad[i - 1, jp - 1]
            ) / (4.0 * hr * ht)

            m00 = u_rr
            m01 = (u_rt - u_t / R) / R
            m11 = u_tt / R**2 + u_r / R
            det = m00 * m11 - m01 * m01
            F[i - 1, j] = det - 1.0
            if m00 <= 0.0 or det <= 0.0:
                pd_ok = False

            if want_jac:
                c_rr = m11
                c_rt = -2.0 * m01 / R
                c_tt = m00 / R**2
                c_r = m00 / R
                c_t = 2.0 * m01 / R**2
                v = vals[i - 1, j]
                v[0] = -2.0 * (c_rr / hr**2 + c_tt / ht**2)
                v[1] = c_rr / hr**2 + c_r / (2.0 * hr)
                v[2] = c_rr / hr**2 - c_r / (2.0 * hr)
                v[3] = c_tt / ht**2 + c_t / (2.0 * ht)
                v[4] = c_tt / ht**2 - c_t / (2.0 * ht)
                mixed = c_rt / (4.0 * hr * ht)
                v[5] = mixed
                v[6] = -mixed
                v[7] = -mixed
                v[8] = mixed
    return F, vals, pd_ok


@njit(cache=True)
def assemble_3d(upad, r, sin_t, cos_t, hr, ht, hp, want_jac):
    nr = upad.shape[0]
    nt = upad.shape[1] - 2
    np_ = upad.shape[2] - 2
    F = np.empty((nr - 2, nt, np_))
    vals = np.empty((nr - 2, nt, np_, N_OFF_3D if want_jac else 0))
    pd_ok = True
    for i in range(1, nr - 1):
        R = r[i]
        for j in range(nt):
            S = sin_t[j]
            Ct = cos_t[j]
            jp = j + 1
            for k in range(np_):
                kp = k + 1
                c = upad[i, jp, kp]
                u_r = (upad[i + 1, jp, kp] - upad[i - 1, jp, kp]) / (2.0 * hr)
                u_rr = (upad[i + 1, jp, kp] - 2.0 * c + upad[i - 1, jp, kp]) / hr**2
                u_t = (upad[i, jp + 1, kp] - upad[i, jp - 1, kp]) / (2.0 * ht)
                u_tt = (upad[i, jp + 1, kp] - 2.0 * c + upad[i, jp - 1, kp]) / ht**2
                u_p = (upad[i, jp, kp + 1] - upad[i, jp, kp - 1]) / (2.0 * hp)
                u_pp = (upad[i, jp, kp + 1] - 2.0 * c + upad[i, jp, kp - 1]) / hp**2
                u_rt = (
                    upad[i + 1, jp + 1, kp] - upad[i + 1, jp - 1, kp]
                    - upad[i - 1, jp + 1, kp] + upad[i - 1, jp - 1, kp]
                ) / (4.0 * hr * ht)
                u_rp = (
                    upad[i + 1, jp, kp + 1] - upad[i + 1, jp, kp - 1]
                    - upad[i - 1, jp, kp + 1] + upad[i - 1, jp, kp - 1]
                ) / (4.0 * hr * hp)
                u_tp = (
                    upad[i, jp + 1, kp + 1] - upad[i, jp + 1, kp - 1]
                    - upad[i, jp - 1, kp + 1] + upad[i, jp - 1, kp - 1]
                ) / (4.0 * ht * hp)

                g_t = u_t / R
                g_p = u_p / (R * S)

                m00 = u_rr
                m01 = (u_rt - g_t) / R
                m02 = (u_rp - S * g_p) / (R * S)
                m11 = (u_tt + R * u_r) / R**2
                m12 = (u_tp - R * Ct * g_p) / (R**2 * S)
                m22 = (u_pp + R * S * (S * u_r + Ct * g_t)) / (R * S) ** 2

                c00 = m11 * m22 - m12 * m12
                c01 = m02 * m12 - m01 * m22
                c02 = m01 * m12 - m02 * m11
                c11 = m00 * m22 - m02 * m02
                c12 = m02 * m01 - m00 * m12
                c22 = m00 * m11 - m01 * m01

                det = m00 * c00 + m01 * c01 + m02 * c02
                F[i - 1, j, k] = det - 1.0
                if m00 <= 0.0 or c22 <= 0.0 or det <= 0.0:
                    pd_ok = False

                if want_jac:
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
                    c_t = -2.0 * C01 / R + S * Ct * C22
                    c_p = -2.0 * C02 / R - 2.0 * (Ct / S) * C12

                    v = vals[i - 1, j, k]
                    v[0] = -2.0 * (c_rr / hr**2 + c_tt / ht**2 + c_pp / hp**2)
                    v[1] = c_rr / hr**2 + c_r / (2.0 * hr)
                    v[2] = c_rr / hr**2 - c_r / (2.0 * hr)
                    v[3] = c_tt / ht**2 + c_t / (2.0 * ht)
                    v[4] = c_tt / ht**2 - c_t / (2.0 * ht)
                    v[5] = c_pp / hp**2 + c_p / (2.0 * hp)
                    v[6] = c_pp / hp**2 - c_p / (2.0 * hp)
                    mrt = c_rt / (4.0 * hr * ht)
                    v[7] = mrt
                    v[8] = -mrt
                    v[9] = -mrt
                    v[10] = mrt
                    mrp = c_rp / (4.0 * hr * hp)
                    v[11] = mrp
                    v[12] = -mrp
                    v[13] = -mrp
                    v[14] = mrp
                    mtp = c_tp / (4.0 * ht * hp)
                    v[15] = mtp
                    v[16] = -mtp
                    v[17] = -mtp
                    v[18] = mtp
    return F, vals, pd_ok

"""Numba-compiled twin of interp_numpy: per-point 4^n patch loops."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _weights_into(xi, w, wd, wdd):
    w[0] = -(xi**3 - 3.0 * xi**2 + 2.0 * xi) / 6.0
    w[1] = (xi**3 - 2.0 * xi**2 - xi + 2.0) / 2.0
    w[2] = -(xi**3 - xi**2 - 2.0 * xi) / 2.0
    w[3] = (xi**3 - xi) / 6.0
    wd[0] = -(3.0 * xi**2 - 6.0 * xi + 2.0) / 6.0
    wd[1] = (3.0 * xi**2 - 4.0 * xi - 1.0) / 2.0
    wd[2] = -(3.0 * xi**2 - 2.0 * xi - 2.0) / 2.0
    wd[3] = (3.0 * xi**2 - 1.0) / 6.0
    wdd[0] = 1.0 - xi
    wdd[1] = 3.0 * xi - 2.0
    wdd[2] = 1.0 - 3.0 * xi
    wdd[3] = xi


@njit(cache=True)
def patch_eval_2d(upad, irs, jts, xi_r, xi_t, hr, ht):
    m = irs.shape[0]
    val = np.empty(m)
    d = np.empty((m, 2))
    dd = np.empty((m, 2, 2))
    wr = np.empty(4); wrd = np.empty(4); wrdd = np.empty(4)
    wt = np.empty(4); wtd = np.empty(4); wtdd = np.empty(4)
    for p in range(m):
        _weights_into(xi_r[p], wr, wrd, wrdd)
        _weights_into(xi_t[p], wt, wtd, wtdd)
        s = s_r = s_t = s_rr = s_rt = s_tt = 0.0
        for a in range(4):
            ia = irs[p] + a
            for b in range(4):
                u = upad[ia, jts[p] + b]
                s += wr[a] * wt[b] * u
                s_r += wrd[a] * wt[b] * u
                s_t += wr[a] * wtd[b] * u
                s_rr += wrdd[a] * wt[b] * u
                s_rt += wrd[a] * wtd[b] * u
                s_tt += wr[a] * wtdd[b] * u
        val[p] = s
        d[p, 0] = s_r / hr
        d[p, 1] = s_t / ht
        dd[p, 0, 0] = s_rr / hr**2
        dd[p, 0, 1] = s_rt / (hr * ht)
        dd[p, 1, 0] = dd[p, 0, 1]
        dd[p, 1, 1] = s_tt / ht**2
    return val, d, dd


@njit(cache=True)
def patch_eval_3d(upad, irs, jts, kps, xi_r, xi_t, xi_p, hr, ht, hp):
    m = irs.shape[0]
    val = np.empty(m)
    d = np.empty((m, 3))
    dd = np.empty((m, 3, 3))
    wr = np.empty(4); wrd = np.empty(4); wrdd = np.empty(4)
    wt = np.empty(4); wtd = np.empty(4); wtdd = np.empty(4)
    wp = np.empty(4); wpd = np.empty(4); wpdd = np.empty(4)
    for p in range(m):
        _weights_into(xi_r[p], wr, wrd, wrdd)
        _weights_into(xi_t[p], wt, wtd, wtdd)
        _weights_into(xi_p[p], wp, wpd, wpdd)
        s = s_r = s_t = s_p = 0.0
        s_rr = s_tt = s_pp = s_rt = s_rp = s_tp = 0.0
        for a in range(4):
            ia = irs[p] + a
            for b in range(4):
                jb = jts[p] + b
                for c in range(4):
                    u = upad[ia, jb, kps[p] + c]
                    wv = wr[a] * wt[b] * wp[c]
                    s += wv * u
                    s_r += wrd[a] * wt[b] * wp[c] * u
                    s_t += wr[a] * wtd[b] * wp[c] * u
                    s_p += wr[a] * wt[b] * wpd[c] * u
                    s_rr += wrdd[a] * wt[b] * wp[c] * u
                    s_tt += wr[a] * wtdd[b] * wp[c] * u
                    s_pp += wr[a] * wt[b] * wpdd[c] * u
                    s_rt += wrd[a] * wtd[b] * wp[c] * u
                    s_rp += wrd[a] * wt[b] * wpd[c] * u
                    s_tp += wr[a] * wtd[b] * wpd[c] * u
        val[p] = s
        d[p, 0] = s_r / hr
        d[p, 1] = s_t / ht
        d[p, 2] = s_p / hp
        dd[p, 0, 0] = s_rr / hr**2
        dd[p, 1, 1] = s_tt / ht**2
        dd[p, 2, 2] = s_pp / hp**2
        dd[p, 0, 1] = s_rt / (hr * ht)
        dd[p, 1, 0] = dd[p, 0, 1]
        dd[p, 0, 2] = s_rp / (hr * hp)
        dd[p, 2, 0] = dd[p, 0, 2]
        dd[p, 1, 2] = s_tp / (ht * hp)
        dd[p, 2, 1] = dd[p, 1, 2]
    return val, d, dd

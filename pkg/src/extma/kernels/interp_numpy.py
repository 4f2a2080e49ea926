"""Vectorized-numpy cubic-Lagrange patch evaluation on padded grid arrays.

Each query point carries a 4-node patch start per dimension and a local
coordinate xi in [0, 1] measured from the patch's second node; outputs are
the interpolated value and its first/second derivatives in grid
coordinates (already divided by the grid steps).
"""

from __future__ import annotations

import numpy as np


def _weights(xi):
    """Cubic Lagrange basis at nodes (-1, 0, 1, 2) and its two derivatives."""
    xi = np.asarray(xi, dtype=float)
    w = np.stack(
        [
            -(xi**3 - 3.0 * xi**2 + 2.0 * xi) / 6.0,
            (xi**3 - 2.0 * xi**2 - xi + 2.0) / 2.0,
            -(xi**3 - xi**2 - 2.0 * xi) / 2.0,
            (xi**3 - xi) / 6.0,
        ],
        axis=-1,
    )
    wd = np.stack(
        [
            -(3.0 * xi**2 - 6.0 * xi + 2.0) / 6.0,
            (3.0 * xi**2 - 4.0 * xi - 1.0) / 2.0,
            -(3.0 * xi**2 - 2.0 * xi - 2.0) / 2.0,
            (3.0 * xi**2 - 1.0) / 6.0,
        ],
        axis=-1,
    )
    wdd = np.stack([1.0 - xi, 3.0 * xi - 2.0, 1.0 - 3.0 * xi, xi], axis=-1)
    return w, wd, wdd


def patch_eval_2d(upad, irs, jts, xi_r, xi_t, hr, ht):
    """Value, grid gradient and grid Hessian at M points on a 2D grid.

    upad: (Nr, Nt + 4) values padded by two ghost columns each side.
    irs/jts: (M,) patch start indices (radial unpadded, angular padded).
    """
    ar = np.arange(4)
    patch = upad[irs[:, None, None] + ar[None, :, None], jts[:, None, None] + ar[None, None, :]]
    wr, wrd, wrdd = _weights(xi_r)
    wt, wtd, wtdd = _weights(xi_t)

    val = np.einsum("ma,mb,mab->m", wr, wt, patch)
    d = np.empty((len(irs), 2))
    d[:, 0] = np.einsum("ma,mb,mab->m", wrd, wt, patch) / hr
    d[:, 1] = np.einsum("ma,mb,mab->m", wr, wtd, patch) / ht
    dd = np.empty((len(irs), 2, 2))
    dd[:, 0, 0] = np.einsum("ma,mb,mab->m", wrdd, wt, patch) / hr**2
    dd[:, 0, 1] = np.einsum("ma,mb,mab->m", wrd, wtd, patch) / (hr * ht)
    dd[:, 1, 0] = dd[:, 0, 1]
    dd[:, 1, 1] = np.einsum("ma,mb,mab->m", wr, wtdd, patch) / ht**2
    return val, d, dd


def patch_eval_3d(upad, irs, jts, kps, xi_r, xi_t, xi_p, hr, ht, hp):
    """3D analogue of patch_eval_2d on a (Nr, Nt + 4, Np + 4) padded array."""
    ar = np.arange(4)
    patch = upad[
        irs[:, None, None, None] + ar[None, :, None, None],
        jts[:, None, None, None] + ar[None, None, :, None],
        kps[:, None, None, None] + ar[None, None, None, :],
    ]
    wr, wrd, wrdd = _weights(xi_r)
    wt, wtd, wtdd = _weights(xi_t)
    wp, wpd, wpdd = _weights(xi_p)

    def comb(a, b, c):
        return np.einsum("ma,mb,mc,mabc->m", a, b, c, patch)

    val = comb(wr, wt, wp)
    d = np.empty((len(irs), 3))
    d[:, 0] = comb(wrd, wt, wp) / hr
    d[:, 1] = comb(wr, wtd, wp) / ht
    d[:, 2] = comb(wr, wt, wpd) / hp
    dd = np.empty((len(irs), 3, 3))
    dd[:, 0, 0] = comb(wrdd, wt, wp) / hr**2
    dd[:, 1, 1] = comb(wr, wtdd, wp) / ht**2
    dd[:, 2, 2] = comb(wr, wt, wpdd) / hp**2
    dd[:, 0, 1] = dd[:, 1, 0] = comb(wrd, wtd, wp) / (hr * ht)
    dd[:, 0, 2] = dd[:, 2, 0] = comb(wrd, wt, wpd) / (hr * hp)
    dd[:, 1, 2] = dd[:, 2, 1] = comb(wr, wtd, wpd) / (ht * hp)
    return val, d, dd

"""Divergence structure of the Hessian-determinant operator.

det(D^2 u) = div(psi(u)) with psi(u)_j = u_1 * cof(D^2 u)_{1j}, because the
first cofactor row of a Hessian is divergence free.  Subtracting any
reference field xi with div(xi) = 1 makes the flux of psi(u) - xi through a
surface enclosing the excluded set independent of the surface; suitably
normalized, that flux is the residue of the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import unit_ball_volume
from .surfaces import SurfaceSpec

XI_CHOICES = ("x1e1", "x_over_n")

# flux refinement below this absolute difference is considered converged
_ACCURACY_TARGET = 1e-6


def cofactor_row(H):
    """First row of the cofactor matrix of a (stack of) square matrices.

    Closed-form minor expansion for n <= 4; LU-based minor determinants for
    n >= 5.  The input does not need to be invertible.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[-1]
    if H.shape[-2] != n:
        raise DomainError("cofactor_row expects square matrices")
    if n == 2:
        return np.stack([H[..., 1, 1], -H[..., 1, 0]], axis=-1)
    if n == 3:
        c1 = H[..., 1, 1] * H[..., 2, 2] - H[..., 1, 2] * H[..., 2, 1]
        c2 = -(H[..., 1, 0] * H[..., 2, 2] - H[..., 1, 2] * H[..., 2, 0])
        c3 = H[..., 1, 0] * H[..., 2, 1] - H[..., 1, 1] * H[..., 2, 0]
        return np.stack([c1, c2, c3], axis=-1)
    if n == 4:
        return np.stack(
            [(-1.0) ** j * _det3(_minor(H, 0, j)) for j in range(4)], axis=-1
        )
    return np.stack(
        [(-1.0) ** j * np.linalg.det(_minor(H, 0, j)) for j in range(n)], axis=-1
    )


def _minor(H, i, j):
    keep_r = [k for k in range(H.shape[-2]) if k != i]
    keep_c = [k for k in range(H.shape[-1]) if k != j]
    return H[..., keep_r, :][..., :, keep_c]


def _det3(M):
    return (
        M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
        + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
    )


@dataclass(frozen=True)
class FluxField:
    """A twice-differentiable field paired with a reference field xi.

    Both admissible xi have unit divergence: the coordinate field x_1 e_1
    and the scaled identity x / n.
    """

    u: object
    xi_choice: str = "x1e1"

    def __post_init__(self):
        if self.xi_choice not in XI_CHOICES:
            raise DomainError(f"xi_choice must be one of {XI_CHOICES}")

    @property
    def n(self):
        return self.u.n


def xi_vector(choice, X):
    X = np.asarray(X, dtype=float)
    if choice == "x1e1":
        out = np.zeros_like(X)
        out[..., 0] = X[..., 0]
        return out
    return X / X.shape[-1]


def psi(field: FluxField, X):
    """psi(u)_j = u_1 * cof(D^2 u)_{1j}, vectorized over points."""
    u = field.u
    X = np.asarray(X, dtype=float)
    g = u.grad(X)
    H = u.hess(X)
    return g[..., 0, None] * cofactor_row(H)


@dataclass(frozen=True)
class ResidueResult:
    """Normalized flux of psi(u) - xi through one surface."""

    value: float
    surface: SurfaceSpec
    quadrature_error_estimate: float
    n: int
    node_count: int
    xi_choice: str
    accuracy_warning: bool = False

    def to_dict(self):
        return {
            "value": self.value,
            "surface": self.surface.describe(),
            "nodes": self.node_count,
            "error_estimate": self.quadrature_error_estimate,
            "xi_choice": self.xi_choice,
            "n": self.n,
            "accuracy_warning": self.accuracy_warning,
        }


def residue_normalization(n):
    if n < 2:
        raise DomainError("residue defined for n >= 2")
    if n == 2:
        return 1.0 / (2.0 * np.pi)
    return 1.0 / ((n - 2) * n * unit_ball_volume(n))


def _flux_value(field: FluxField, surface: SurfaceSpec):
    pts, normals, weights = surface.nodes()
    integrand = np.sum((psi(field, pts) - xi_vector(field.xi_choice, pts)) * normals, axis=-1)
    # np.sum performs pairwise summation, so the reduction order is fixed
    return float(np.sum(weights * integrand)), pts.shape[0]


def residue(field: FluxField, surface: SurfaceSpec, n=None):
    """Residue of the solution as a surface flux integral.

    The value comes from the refined rule (every node count doubled); the
    error estimate is the difference between the base and refined rules.
    """
    if n is None:
        n = field.n
    if n != field.n or n != surface.n:
        raise DomainError("dimension mismatch between field and surface")
    coarse, n_coarse = _flux_value(field, surface)
    fine, n_fine = _flux_value(field, surface.refined())
    norm = residue_normalization(n)
    value = norm * fine
    est = abs(norm * (fine - coarse))
    return ResidueResult(
        value=value,
        surface=surface,
        quadrature_error_estimate=est,
        n=n,
        node_count=n_fine,
        xi_choice=field.xi_choice,
        accuracy_warning=bool(est > _ACCURACY_TARGET),
    )


def residue_from_source(f_minus_1, support_radius, tol=1e-8, max_level=9):
    """(1 / 2 pi) * integral of f - 1 over R^2, for compactly supported f - 1.

    Integrates in polar coordinates over the support disk with a tensor
    Gauss-Legendre (radius) x trapezoid (angle) rule, doubling both counts
    until two consecutive levels agree to tol.
    """
    if support_radius <= 0.0:
        raise DomainError("support radius must be positive")

    from .quadrature import gauss_legendre

    def level_value(m_r, m_t):
        xg, wg = gauss_legendre(m_r)
        r = 0.5 * support_radius * (xg + 1.0)
        wr = 0.5 * support_radius * wg
        t = 2.0 * np.pi * np.arange(m_t) / m_t
        wt = 2.0 * np.pi / m_t
        R, T = np.meshgrid(r, t, indexing="ij")
        pts = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
        vals = np.asarray(f_minus_1(pts.reshape(-1, 2)), dtype=float).reshape(R.shape)
        return float(np.sum((wr[:, None] * wt) * R * vals))

    m_r, m_t = 16, 32
    prev = level_value(m_r, m_t)
    for _ in range(max_level):
        m_r *= 2
        m_t *= 2
        cur = level_value(m_r, m_t)
        if abs(cur - prev) <= tol:
            return cur / (2.0 * np.pi)
        prev = cur
    return prev / (2.0 * np.pi)

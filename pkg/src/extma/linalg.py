"""Small-matrix linear algebra: SPD validation, unimodular normalization,
quadratic profiles, and unimodular affine maps.

Everything here is dimension-generic for 2 <= n <= 6 and deterministic;
eigenvalues come from a cyclic Jacobi sweep rather than LAPACK so that
repeated runs produce bit-identical diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MAX_DIM = 6

# relative asymmetry above this is an input error, below it is repaired
_ASYM_REJECT = 1e-8
_DET_TOL = 1e-10


def symmetrize(M):
    """Return (M + M') / 2, rejecting asymmetry above 1e-8 relative."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    scale = max(np.abs(M).max(), 1.0)
    asym = np.abs(M - M.T).max() / scale
    if asym > _ASYM_REJECT:
        raise DomainError(f"matrix asymmetry {asym:.3e} exceeds {_ASYM_REJECT:.0e}")
    return 0.5 * (M + M.T)


def jacobi_eigenvalues(M, tol=1e-12, max_sweeps=60):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps the strict upper triangle in row-major order until the
    off-diagonal Frobenius norm falls below tol (relative to the matrix
    norm).  Deterministic sweep order; intended for n <= 6.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    if n == 1:
        return A.ravel().copy()
    norm = np.sqrt((A * A).sum())
    if norm == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (np.triu(A, 1) ** 2).sum())
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-3 * tol * norm / (n * n):
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                A = rot.T @ A @ rot
    return np.sort(np.diag(A))


def _require_spd(M, name="matrix"):
    eig = jacobi_eigenvalues(M)
    if eig[0] <= 0.0:
        raise DomainError(f"{name} is not positive definite (min eigenvalue {eig[0]:.3e})")
    return eig


@dataclass(frozen=True)
class SpdUnimodular:
    """Symmetric positive definite matrix with determinant one."""

    entries: np.ndarray

    def __post_init__(self):
        M = symmetrize(self.entries)
        n = M.shape[0]
        if not (2 <= n <= MAX_DIM):
            raise DomainError(f"dimension {n} outside supported range 2..{MAX_DIM}")
        eig = _require_spd(M, "SpdUnimodular")
        det = float(np.prod(eig))
        if abs(det - 1.0) > _DET_TOL:
            raise DomainError(f"determinant {det} is not 1 within {_DET_TOL:.0e}")
        object.__setattr__(self, "entries", M)

    @property
    def n(self):
        return self.entries.shape[0]

    @staticmethod
    def identity(n):
        return SpdUnimodular(np.eye(n))

    def quadratic_form(self, X):
        """x'Ax for one point or a stack of points (last axis = coords)."""
        X = np.asarray(X, dtype=float)
        return np.einsum("...i,ij,...j->...", X, self.entries, X)


@dataclass(frozen=True)
class QuadraticProfile:
    """Quadratic polynomial x -> x'Ax/2 + b.x + c with unimodular A."""

    A: SpdUnimodular
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape[0] != self.A.n:
            raise DomainError("b has wrong length for A")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def n(self):
        return self.A.n

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return 0.5 * self.A.quadratic_form(X) + X @ self.b + self.c


@dataclass(frozen=True)
class AffineMap:
    """Unimodular affine map x -> Tx + shift (|det T - 1| <= 1e-10)."""

    T: np.ndarray
    shift: np.ndarray = field(default=None)

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise DomainError("T must be square")
        n = T.shape[0]
        det = float(np.linalg.det(T))
        if abs(det - 1.0) > _DET_TOL:
            raise DomainError(f"det(T) = {det} is not 1 within {_DET_TOL:.0e}")
        shift = self.shift
        shift = np.zeros(n) if shift is None else np.asarray(shift, dtype=float).reshape(-1)
        if shift.shape[0] != n:
            raise DomainError("shift has wrong length for T")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "shift", shift)

    @property
    def n(self):
        return self.T.shape[0]

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.T.T + self.shift

    @staticmethod
    def identity(n):
        return AffineMap(np.eye(n), np.zeros(n))


def normalize_quadratic(A_raw):
    """Rescale a symmetric positive definite matrix to determinant one.

    Returns (SpdUnimodular, scale) with A = A_raw / scale and
    scale = det(A_raw)^(1/n).
    """
    M = symmetrize(A_raw)
    eig = _require_spd(M, "normalize_quadratic input")
    n = M.shape[0]
    scale = float(np.exp(np.log(eig).sum() / n))
    return SpdUnimodular(M / scale), scale


def pushforward_solution(u, amap: AffineMap):
    """Compose a scalar field with a unimodular affine map: v(x) = u(Tx + shift).

    If det(D^2 u) = 1 on the image domain then det(D^2 v) = 1 on the
    preimage, since D^2 v = T' (D^2 u) T and det T = 1.
    """
    from .fields import AffineImageField

    return AffineImageField(u, amap)

"""Recover the far-field expansion (A, b, c, d, dipole) from shell samples.

The quadratic part dominates the tail by r^n, so the fit is staged: the
quadratic coefficients come from the two outermost shells, the tail
coefficients from the residuals on all shells, and the two stages are
alternated until they stop moving.  The alternation makes the fitter exact
on its own model class in both tail models (power and log), because each
stage sees data with the other stage's part removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError
from .kelvin import loglog_slope
from .linalg import SpdUnimodular, jacobi_eigenvalues, normalize_quadratic

_COND_LIMIT = 1e12
# shell residual below this (times the shell value scale) is solver noise
_EXACT_FLOOR = 5e-13


@dataclass(frozen=True)
class AsymptoticExpansion:
    """u ~ x'Ax/2 + b.x + c - d q^(2-n) + dipole.x/|x|^n, q = sqrt(x'Ax).

    For n = 2 the tail model is + d log q instead of the power term.
    error_order is the fitted decay exponent of what the model leaves
    unexplained (-inf when the samples are an exact model member).
    """

    n: int
    A: SpdUnimodular
    b: np.ndarray
    c: float
    d: float
    dipole: np.ndarray = None
    # decay slope of the staged-fit residuals (before the determinant
    # normalization of A, whose slack is below every stated tolerance)
    error_order: float = float("-inf")
    shell_radii: tuple = ()
    shell_residuals: tuple = ()

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape[0] != self.n:
            raise DomainError("b has wrong length")
        dip = self.dipole
        dip = np.zeros(self.n) if dip is None else np.asarray(dip, dtype=float).reshape(-1)
        if dip.shape[0] != self.n:
            raise DomainError("dipole has wrong length")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dipole", dip)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "d", float(self.d))

    def quadratic_part(self, X):
        X = np.asarray(X, dtype=float)
        return 0.5 * self.A.quadratic_form(X) + X @ self.b

    def tail_part(self, X, include_dipole=True):
        X = np.asarray(X, dtype=float)
        q = np.sqrt(self.A.quadratic_form(X))
        if self.n == 2:
            out = self.d * np.log(q)
        else:
            out = -self.d * q ** (2.0 - self.n)
        if include_dipole and self.n >= 3:
            r = np.sqrt(np.sum(X * X, axis=-1))
            out = out + (X @ self.dipole) * r ** (-float(self.n))
        return out

    def evaluate(self, X, include_dipole=True):
        return self.quadratic_part(X) + self.c + self.tail_part(X, include_dipole)

    def to_dict(self):
        return {
            "n": self.n,
            "A": [[float(v) for v in row] for row in self.A.entries],
            "b": [float(v) for v in self.b],
            "c": self.c,
            "d": self.d,
            "dipole": [float(v) for v in self.dipole],
            "error_order": None if not np.isfinite(self.error_order) else self.error_order,
            "shells": [float(v) for v in self.shell_radii],
            "shell_residuals": [float(v) for v in self.shell_residuals],
        }


@dataclass(frozen=True)
class SampleSet:
    """Far-field samples organized in radius shells.

    Needs at least 5 shells with 40+ points each, all at radii at least
    twice the inner domain radius; that keeps the staged fit conditioned.
    """

    points: np.ndarray
    values: np.ndarray
    shell_radii: np.ndarray
    shell_index: np.ndarray
    inner_radius: float
    source: str = "analytic"
    grads: np.ndarray = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        radii = np.asarray(self.shell_radii, dtype=float)
        idx = np.asarray(self.shell_index, dtype=int)
        if pts.shape[0] != vals.shape[0] or pts.shape[0] != idx.shape[0]:
            raise DomainError("points, values and shell_index must align")
        if radii.size < 5:
            raise DomainError("need at least 5 shells")
        counts = np.bincount(idx, minlength=radii.size)
        if counts.min() < 40:
            raise DomainError("need at least 40 points per shell")
        if np.any(np.diff(radii) <= 0):
            raise DomainError("shell radii must be strictly increasing")
        if radii[0] < 2.0 * self.inner_radius:
            raise DomainError("shell radii must be at least twice the inner radius")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "shell_radii", radii)
        object.__setattr__(self, "shell_index", idx)

    @property
    def n(self):
        return self.points.shape[-1]


def shell_directions(n, count, seed=0):
    """Deterministic well-spread unit vectors (seeded Gaussian, normalized)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, n))
    return v / np.sqrt(np.sum(v * v, axis=-1))[:, None]


def sample_shells(fieldobj, radii, points_per_shell=64, seed=0, source="analytic",
                  inner_radius=None):
    """Sample a field on concentric shells into a SampleSet."""
    radii = np.asarray(radii, dtype=float)
    pts, vals, idx = [], [], []
    for k, r in enumerate(radii):
        dirs = shell_directions(fieldobj.n, points_per_shell, seed=seed + k)
        X = r * dirs
        pts.append(X)
        vals.append(np.asarray(fieldobj.value(X), dtype=float))
        idx.append(np.full(points_per_shell, k))
    if inner_radius is None:
        inner_radius = float(getattr(fieldobj, "inner_radius", 0.0))
    return SampleSet(
        points=np.concatenate(pts),
        values=np.concatenate(vals),
        shell_radii=radii,
        shell_index=np.concatenate(idx),
        inner_radius=inner_radius,
        source=source,
    )


def _scaled_lstsq(design, rhs):
    """Least squares with column equilibration and a conditioning guard."""
    scale = np.sqrt(np.sum(design * design, axis=0))
    scale[scale == 0.0] = 1.0
    D = design / scale
    sv = np.linalg.svd(D, compute_uv=False)
    cond_normal = (sv[0] / sv[-1]) ** 2 if sv[-1] > 0 else np.inf
    if cond_normal > _COND_LIMIT:
        raise FitError(
            f"normal equations condition {cond_normal:.2e} exceeds 1e12; "
            "widen the radius range or add shells"
        )
    coef, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    return coef / scale


def _quadratic_design(X, include_const=True):
    n = X.shape[-1]
    cols = []
    for i in range(n):
        cols.append(0.5 * X[:, i] ** 2)
    for i in range(n):
        for j in range(i + 1, n):
            cols.append(X[:, i] * X[:, j])
    for i in range(n):
        cols.append(X[:, i])
    if include_const:
        cols.append(np.ones(X.shape[0]))
    return np.stack(cols, axis=-1)


def _unpack_quadratic(coef, n):
    A = np.zeros((n, n))
    k = 0
    for i in range(n):
        A[i, i] = coef[k]
        k += 1
    for i in range(n):
        for j in range(i + 1, n):
            A[i, j] = A[j, i] = coef[k]
            k += 1
    b = np.asarray(coef[k : k + n], dtype=float)
    return A, b


def fit_expansion(samples: SampleSet, n=None, include_residue=True, include_dipole=True,
                  passes=3):
    """Staged least-squares fit of the far-field expansion.

    Stage one fits the quadratic part (A, b) on the outermost shell pair;
    stage two fits (c, d[, dipole]) on the residuals over all shells against
    the tail basis; the stages alternate `passes` times so each sees data
    with the other part removed.  The returned A is normalized to det 1.
    """
    if n is None:
        n = samples.n
    if n != samples.n:
        raise DomainError("dimension mismatch between samples and request")
    X = samples.points
    y = samples.values
    ridx = samples.shell_index
    n_shells = samples.shell_radii.size
    pair_mask = ridx >= n_shells - 2

    qd_pair = _quadratic_design(X[pair_mask], include_const=True)
    r = np.sqrt(np.sum(X * X, axis=-1))
    # inverse-variance row weights matched to the remainder of the model
    # being fitted (O(r^(2-2n)) with the residue term, O(r^(2-n)) without,
    # log-flat for the truncated n=2 model): without them the equal-weight
    # fit trades flat far-shell ripple for near-shell sum-of-squares and
    # destroys the residual decay order
    if include_residue:
        remainder_order = 2.0 - 2.0 * n
    else:
        remainder_order = 0.0 if n == 2 else 2.0 - n
    weight = (samples.shell_radii ** (-remainder_order))[ridx]
    weight = weight / weight.max()

    def tail_design(A_norm):
        q = np.sqrt(A_norm.quadratic_form(X))
        cols = [np.ones_like(y)]
        if include_residue:
            cols.append(np.log(q) if n == 2 else q ** (2.0 - n))
        if include_dipole and n >= 3:
            for j in range(n):
                cols.append(X[:, j] * r ** (-float(n)))
        return np.stack(cols, axis=-1)

    def model_values(A_raw, b, design, tail_coef):
        return 0.5 * np.einsum("mi,ij,mj->m", X, A_raw, X) + X @ b + design @ tail_coef

    tail_and_c = np.zeros_like(y)
    A_raw = np.eye(n)
    b = np.zeros(n)
    tail_coef = None
    design = None
    for _ in range(passes):
        coef = _scaled_lstsq(qd_pair, (y - tail_and_c)[pair_mask])
        A_raw, b = _unpack_quadratic(coef[:-1], n)
        eig = jacobi_eigenvalues(0.5 * (A_raw + A_raw.T))
        if eig[0] <= 0.0:
            raise DomainError("fitted quadratic part is not positive definite")
        A_norm, _ = normalize_quadratic(A_raw)
        w = y - 0.5 * np.einsum("mi,ij,mj->m", X, A_raw, X) - X @ b
        design = tail_design(A_norm)
        tail_coef = _scaled_lstsq(design * weight[:, None], w * weight)
        tail_and_c = design @ tail_coef

    # joint polish: a whole-model correction solve on the (small) residual
    # removes the quadratic-coefficient leak that the shell-pair stage
    # cannot see, making the fitter exact on its own model class
    for _ in range(2):
        resid_now = y - model_values(A_raw, b, design, tail_coef)
        joint = np.concatenate([_quadratic_design(X, include_const=False), design], axis=1)
        corr = _scaled_lstsq(joint * weight[:, None], resid_now * weight)
        n_quad = n + n * (n - 1) // 2 + n
        dA, db = _unpack_quadratic(corr[:n_quad], n)
        A_raw = A_raw + dA
        b = b + db
        tail_coef = tail_coef + corr[n_quad:]
        design = tail_design(normalize_quadratic(A_raw)[0])

    c = float(tail_coef[0])
    k = 1
    d = 0.0
    if include_residue:
        d = float(tail_coef[k]) if n == 2 else -float(tail_coef[k])
        k += 1
    dipole = np.zeros(n)
    if include_dipole and n >= 3:
        dipole = np.asarray(tail_coef[k : k + n], dtype=float)

    resid = y - model_values(A_raw, b, design, tail_coef)
    shell_rms = np.array(
        [float(np.sqrt(np.mean(resid[ridx == k] ** 2))) for k in range(n_shells)]
    )
    floors = _EXACT_FLOOR * (1.0 + samples.shell_radii**2)
    if np.all(shell_rms <= floors):
        order = float("-inf")
    else:
        order, _ = loglog_slope(samples.shell_radii, np.maximum(shell_rms, 1e-300))

    return AsymptoticExpansion(
        n=n,
        A=normalize_quadratic(A_raw)[0],
        b=b,
        c=c,
        d=d,
        dipole=dipole,
        error_order=order,
        shell_radii=tuple(float(v) for v in samples.shell_radii),
        shell_residuals=tuple(float(v) for v in shell_rms),
    )


def residual_decay_order(samples: SampleSet, exp: AsymptoticExpansion,
                         include_residue=True, include_dipole=True):
    """Decay order of the sample residuals against a (possibly truncated) model.

    With include_residue=False the fitted d-term is forced to zero, which
    exposes the order of that term itself; the full model reproduces
    exp.error_order up to the shell statistics.
    """
    X = samples.points
    model = exp.quadratic_part(X) + exp.c
    q = np.sqrt(exp.A.quadratic_form(X))
    if include_residue:
        model = model + (exp.d * np.log(q) if exp.n == 2 else -exp.d * q ** (2.0 - exp.n))
    if include_dipole and exp.n >= 3:
        r = np.sqrt(np.sum(X * X, axis=-1))
        model = model + (X @ exp.dipole) * r ** (-float(exp.n))
    resid = samples.values - model
    rms = np.array(
        [
            float(np.sqrt(np.mean(resid[samples.shell_index == k] ** 2)))
            for k in range(samples.shell_radii.size)
        ]
    )
    slope, stderr = loglog_slope(samples.shell_radii, np.maximum(rms, 1e-300))
    return {"order": slope, "stderr": stderr, "shell_rms": rms.tolist()}


def check_expansion(exp: AsymptoticExpansion, res):
    """Verdict on d == residue and on the post-fit tail order.

    Passes when |d - residue| is inside max(3 * quadrature error estimate,
    1% of the residue, 1e-6) and the leftover decay order is at most
    1 - n + 0.2.
    """
    if exp.n != res.n:
        raise DomainError("expansion and residue have different dimensions")
    margin = max(3.0 * res.quadrature_error_estimate, 0.01 * abs(res.value), 1e-6)
    diff = abs(exp.d - res.value)
    order_threshold = 1.0 - exp.n + 0.2
    order_ok = exp.error_order <= order_threshold
    return {
        "pass": bool(diff <= margin and order_ok),
        "d": exp.d,
        "residue": res.value,
        "difference": diff,
        "margin": margin,
        "error_order": None if not np.isfinite(exp.error_order) else exp.error_order,
        "order_threshold": order_threshold,
        "value_ok": bool(diff <= margin),
        "order_ok": bool(order_ok),
    }

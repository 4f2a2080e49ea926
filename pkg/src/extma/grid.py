"""Annular finite-difference grids in polar (n=2) and spherical (n=3)
coordinates.

Radial spacing is uniform between the two Dirichlet boundaries; angles are
uniform and periodic.  The n=3 colatitude grid is offset half a cell so no
node sits on the polar axis; stencils that reach past a pole wrap to the
antipodal azimuth, which is exact for single-valued fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

# stencil neighbor offsets, one Jacobian column block per entry
OFFSETS_2D = (
    (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
)
OFFSETS_3D = (
    (0, 0, 0),
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
    (1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0),
    (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1),
    (0, 1, 1), (0, 1, -1), (0, -1, 1), (0, -1, -1),
)


@dataclass(frozen=True)
class AnnulusGrid:
    """Structured annulus r in [inner_radius, outer_radius], n = 2 or 3."""

    n: int
    inner_radius: float
    outer_radius: float
    resolution: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError("grid solver supports n = 2 and n = 3 only")
        if not (self.outer_radius > self.inner_radius > 0.0):
            raise DomainError("need outer_radius > inner_radius > 0")
        if self.resolution < 16:
            raise DomainError("resolution must be at least 16")
        if self.n == 3 and self.resolution % 2 != 0:
            raise DomainError("n = 3 needs an even resolution for the pole wrap")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "inner_radius", float(self.inner_radius))
        object.__setattr__(self, "outer_radius", float(self.outer_radius))
        object.__setattr__(self, "resolution", int(self.resolution))

    @property
    def coordinates(self):
        return "polar" if self.n == 2 else "spherical"

    @property
    def shape(self):
        return (self.resolution,) * self.n

    @property
    def hr(self):
        return (self.outer_radius - self.inner_radius) / (self.resolution - 1)

    @property
    def ht(self):
        return (2.0 * np.pi if self.n == 2 else np.pi) / self.resolution

    @property
    def hp(self):
        return 2.0 * np.pi / self.resolution

    def radii(self):
        return self.inner_radius + self.hr * np.arange(self.resolution)

    def thetas(self):
        if self.n == 2:
            return self.ht * np.arange(self.resolution)
        return self.ht * (np.arange(self.resolution) + 0.5)

    def phis(self):
        return self.hp * np.arange(self.resolution)

    def offsets(self):
        return OFFSETS_2D if self.n == 2 else OFFSETS_3D

    def cartesian_nodes(self):
        """Cartesian coordinates of all nodes, shape = grid shape + (n,)."""
        r = self.radii()
        t = self.thetas()
        if self.n == 2:
            R, T = np.meshgrid(r, t, indexing="ij")
            return np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
        p = self.phis()
        R, T, P = np.meshgrid(r, t, p, indexing="ij")
        st = np.sin(T)
        return np.stack([R * st * np.cos(P), R * st * np.sin(P), R * np.cos(T)], axis=-1)

    def boundary_nodes(self, which):
        """Cartesian coordinates on the inner or outer radial boundary."""
        idx = 0 if which == "inner" else -1
        return self.cartesian_nodes()[idx]

    def to_grid_coords(self, X):
        """(r, theta[, phi]) for Cartesian points, angles wrapped to the grid range."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise DomainError("point dimension does not match grid")
        if self.n == 2:
            r = np.hypot(X[..., 0], X[..., 1])
            t = np.mod(np.arctan2(X[..., 1], X[..., 0]), 2.0 * np.pi)
            return r, t
        r = np.sqrt(np.sum(X * X, axis=-1))
        t = np.arccos(np.clip(X[..., 2] / r, -1.0, 1.0))
        p = np.mod(np.arctan2(X[..., 1], X[..., 0]), 2.0 * np.pi)
        return r, t, p

    def pad_values(self, u, width=1):
        """Values extended by `width` ghost layers in the angular directions.

        theta ghosts (n=3) hold the antipodal-azimuth values that the field
        takes past the poles; phi and polar-angle (n=2) ghosts are periodic.
        """
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            raise DomainError("values shape does not match grid")
        w = width
        if self.n == 2:
            nt = self.resolution
            up = np.empty((self.resolution, nt + 2 * w))
            up[:, w : w + nt] = u
            up[:, :w] = u[:, nt - w :]
            up[:, w + nt :] = u[:, :w]
            return up
        nt = np_ = self.resolution
        half = np_ // 2
        up = np.empty((self.resolution, nt + 2 * w, np_ + 2 * w))
        up[:, w : w + nt, w : w + np_] = u
        for m in range(1, w + 1):
            up[:, w - m, w : w + np_] = np.roll(u[:, m - 1, :], -half, axis=-1)
            up[:, w + nt - 1 + m, w : w + np_] = np.roll(u[:, nt - m, :], -half, axis=-1)
        up[:, :, :w] = up[:, :, np_ : np_ + w]
        up[:, :, w + np_ :] = up[:, :, w : 2 * w]
        return up

    def neighbor_maps(self):
        """Flat node index of each stencil neighbor, per offset, interior rows only.

        Applies the same pole/periodic wrapping as pad_values, so Jacobian
        columns always point at real grid unknowns.
        """
        res = self.resolution
        if self.n == 2:
            I, J = np.meshgrid(np.arange(1, res - 1), np.arange(res), indexing="ij")
            maps = []
            for di, dj in OFFSETS_2D:
                maps.append(((I + di) * res + (J + dj) % res).ravel())
            return np.stack(maps, axis=-0)
        I, J, K = np.meshgrid(
            np.arange(1, res - 1), np.arange(res), np.arange(res), indexing="ij"
        )
        half = res // 2
        maps = []
        for di, dj, dk in OFFSETS_3D:
            j2 = J + dj
            k2 = K + dk
            flip = (j2 < 0) | (j2 > res - 1)
            j2 = np.where(j2 < 0, 0, np.where(j2 > res - 1, res - 1, j2))
            k2 = np.where(flip, k2 + half, k2) % res
            maps.append((((I + di) * res + j2) * res + k2).ravel())
        return np.stack(maps, axis=0)

    def interior_ids(self):
        ids = np.arange(int(np.prod(self.shape))).reshape(self.shape)
        return ids[1:-1].ravel()

    def boundary_ids(self):
        ids = np.arange(int(np.prod(self.shape))).reshape(self.shape)
        return np.concatenate([ids[0].ravel(), ids[-1].ravel()])

    def interpolation_bounds(self):
        """Radial range queries may use: one full cell inside each boundary."""
        return self.inner_radius + self.hr, self.outer_radius - self.hr

    def describe(self):
        return {
            "n": self.n,
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
            "resolution": self.resolution,
            "coordinates": self.coordinates,
        }


def save_solution(sol, stem):
    """Persist a grid solution as <stem>.json (metadata) + <stem>.csv (nodes)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    grid = sol.grid
    header = {
        "format": "extma-grid-solution",
        "version": 1,
        "grid": grid.describe(),
        "newton_report": sol.newton_report.to_dict(),
        "csv": stem.name + ".csv",
    }
    json_path = stem.with_suffix(".json")
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")

    csv_path = stem.with_suffix(".csv")
    nodes = grid.cartesian_nodes().reshape(-1, grid.n)
    r = grid.radii()
    t = grid.thetas()
    with csv_path.open("w") as fh:
        if grid.n == 2:
            fh.write("i,j,r,theta,x0,x1,value\n")
            R, T = np.meshgrid(r, t, indexing="ij")
            I, J = np.meshgrid(range(grid.resolution), range(grid.resolution), indexing="ij")
            cols = [I.ravel(), J.ravel(), R.ravel(), T.ravel()]
        else:
            fh.write("i,j,k,r,theta,phi,x0,x1,x2,value\n")
            p = grid.phis()
            R, T, P = np.meshgrid(r, t, p, indexing="ij")
            I, J, K = np.meshgrid(*(range(grid.resolution),) * 3, indexing="ij")
            cols = [I.ravel(), J.ravel(), K.ravel(), R.ravel(), T.ravel(), P.ravel()]
        vals = np.asarray(sol.values).ravel()
        for row in range(vals.size):
            ints = ",".join(str(int(c[row])) for c in cols[: grid.n])
            floats = ",".join(repr(float(c[row])) for c in cols[grid.n :])
            coords = ",".join(repr(float(v)) for v in nodes[row])
            fh.write(f"{ints},{floats},{coords},{vals[row]!r}\n")
    return json_path, csv_path


def load_solution(path):
    """Load a solution saved by save_solution; returns a GridSolution."""
    from .solver import GridSolution, NewtonReport

    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    header = json.loads(path.read_text())
    if header.get("format") != "extma-grid-solution":
        raise DomainError(f"{path} is not a grid solution header")
    g = header["grid"]
    grid = AnnulusGrid(g["n"], g["inner_radius"], g["outer_radius"], g["resolution"])
    csv_path = path.parent / header["csv"]
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    if data.shape[0] != int(np.prod(grid.shape)):
        raise DomainError("node table length does not match the grid")
    values = data[:, -1].reshape(grid.shape)
    rep = header["newton_report"]
    report = NewtonReport(
        iterations=rep["iterations"],
        final_residual=rep["final_residual"],
        residual_history=rep["residual_history"],
        converged=rep["converged"],
    )
    return GridSolution(grid=grid, values=values, newton_report=report)

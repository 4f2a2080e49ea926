"""extma: a numerical laboratory for exterior solutions of det(D^2 u) = 1.

Exact radial solutions, flux-integral residues over arbitrary enclosing
surfaces, Kelvin-transform identity checks, a finite-difference Newton
solver on annular grids, and a far-field expansion fitter that ties the
tail coefficient to the residue.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    ConvexityError,
    DomainError,
    FitError,
)
from .fit import AsymptoticExpansion, SampleSet, check_expansion, fit_expansion, sample_shells
from .flux import FluxField, ResidueResult, cofactor_row, psi, residue, residue_from_source
from .grid import AnnulusGrid, load_solution, save_solution
from .interp import GridField, interpolate
from .kelvin import kelvin_transform, verify_flux_expansion, verify_kelvin_laplace_identity, verify_linearization
from .linalg import AffineMap, QuadraticProfile, SpdUnimodular, normalize_quadratic, pushforward_solution
from .radial import RadialExteriorSolution, radial_derivatives, radial_expansion, radial_value
from .solver import GridSolution, outer_bc_from_expansion, solve
from .surfaces import SurfaceSpec, box, ellipsoid, sphere

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AnnulusGrid",
    "AsymptoticExpansion",
    "ConfigError",
    "ConvergenceError",
    "ConvexityError",
    "DomainError",
    "FitError",
    "FluxField",
    "GridField",
    "GridSolution",
    "QuadraticProfile",
    "RadialExteriorSolution",
    "ResidueResult",
    "SampleSet",
    "SpdUnimodular",
    "SurfaceSpec",
    "box",
    "check_expansion",
    "cofactor_row",
    "ellipsoid",
    "fit_expansion",
    "interpolate",
    "kelvin_transform",
    "load_solution",
    "normalize_quadratic",
    "outer_bc_from_expansion",
    "psi",
    "pushforward_solution",
    "radial_derivatives",
    "radial_expansion",
    "radial_value",
    "residue",
    "residue_from_source",
    "sample_shells",
    "save_solution",
    "solve",
    "sphere",
    "verify_flux_expansion",
    "verify_kelvin_laplace_identity",
    "verify_linearization",
]

"""Command-line entry point: reproducible experiments over the library.

Subcommands: radial | residue | verify | solve-fit.  Each takes one JSON
config (unknown keys rejected), writes machine-readable reports that embed
the resolved config, and exits 0 on pass, 1 on verification failure, 2 on
usage/config errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import fields, fit, flux, grid as gridmod, kelvin, radial, solver, surfaces
from .errors import ConfigError, ConvergenceError, ConvexityError, DomainError, FitError
from .linalg import AffineMap, QuadraticProfile, SpdUnimodular

IDENTITY_TAGS = ("2.1", "2.2", "2.3", "2.4", "2.6")


def _utc_now():
    return datetime.now(timezone.utc).isoformat()


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")
    return path


def _check_keys(cfg, allowed, context):
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {context} config keys: {sorted(unknown)}")


def _merge_defaults(cfg, defaults):
    out = dict(defaults)
    out.update(cfg)
    return out


def _build_field(spec, n):
    """Solution field from a config record (analytic family or saved grid)."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("solution spec must be an object with a 'family' key")
    family = spec["family"]
    if family == "radial":
        _check_keys(spec, {"family", "a", "r0", "u0", "center"}, "radial solution")
        sol = radial.RadialExteriorSolution(
            n, spec.get("a", 1.0), spec.get("r0", 1.0), spec.get("u0", 0.0)
        )
        return fields.RadialSolutionField(sol, center=spec.get("center"))
    if family == "affine_radial":
        _check_keys(spec, {"family", "a", "r0", "u0", "T", "shift"}, "affine_radial solution")
        sol = radial.RadialExteriorSolution(
            n, spec.get("a", 1.0), spec.get("r0", 1.0), spec.get("u0", 0.0)
        )
        amap = AffineMap(np.asarray(spec["T"], dtype=float), spec.get("shift"))
        return fields.AffineImageField(fields.RadialSolutionField(sol), amap)
    if family == "quadratic":
        _check_keys(spec, {"family", "A", "b", "c"}, "quadratic solution")
        A = SpdUnimodular(np.asarray(spec.get("A", np.eye(n).tolist()), dtype=float))
        profile = QuadraticProfile(A, spec.get("b", np.zeros(n)), spec.get("c", 0.0))
        return fields.QuadraticField(profile)
    if family == "power_perturbed":
        _check_keys(spec, {"family", "coeff"}, "power_perturbed solution")
        return fields.PowerPerturbedField(n, spec["coeff"])
    if family == "grid":
        _check_keys(spec, {"family", "path"}, "grid solution")
        sol = gridmod.load_solution(spec["path"])
        if sol.grid.n != n:
            raise ConfigError("saved grid solution has a different dimension")
        return sol.field()
    raise ConfigError(f"unknown solution family {family!r}")


def _build_surface(spec, n, seed):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("surface spec must be an object with a 'kind' key")
    kind = spec["kind"]
    rule = tuple(spec["rule"]) if "rule" in spec else None
    center = spec.get("center")
    if kind == "sphere":
        _check_keys(spec, {"kind", "radius", "center", "rule"}, "sphere")
        return surfaces.sphere(spec["radius"], center=center, n=n, rule=rule, qmc_seed=seed)
    if kind == "ellipsoid":
        _check_keys(spec, {"kind", "semi_axes", "center", "rule"}, "ellipsoid")
        return surfaces.ellipsoid(spec["semi_axes"], center=center, rule=rule)
    if kind == "box":
        _check_keys(spec, {"kind", "half_widths", "center", "rule"}, "box")
        return surfaces.box(spec["half_widths"], center=center, rule=rule)
    raise ConfigError(f"unknown surface kind {kind!r}")


def cmd_radial(cfg, out_dir, seed):
    defaults = {"n": 3, "a": 1.0, "r0": 1.0, "u0": 0.0, "r_stop": None, "r_count": 200}
    _check_keys(cfg, defaults, "radial")
    cfg = _merge_defaults(cfg, defaults)
    sol = radial.RadialExteriorSolution(cfg["n"], cfg["a"], cfg["r0"], cfg["u0"])
    r_stop = cfg["r_stop"] if cfg["r_stop"] is not None else 10.0 * sol.r0
    cfg["r_stop"] = r_stop
    r = np.linspace(sol.r0, r_stop, int(cfg["r_count"]))
    u = radial.radial_value(sol, r)
    up, upp = radial.radial_derivatives(sol, r)
    csv_path = Path(out_dir) / "radial_samples.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w") as fh:
        fh.write("r,u,du,d2u\n")
        for row in zip(r, u, up, upp):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    exp = radial.radial_expansion(sol)
    payload = {
        "expansion": exp.to_dict(),
        "model": "log" if sol.n == 2 else "power",
        "samples_csv": csv_path.name,
        "config": cfg,
        "timestamp": _utc_now(),
    }
    _write_json(Path(out_dir) / "radial_expansion.json", payload)
    return 0


def cmd_residue(cfg, out_dir, seed):
    defaults = {"n": 3, "solution": {"family": "radial"}, "surfaces": None, "xi": "x1e1"}
    _check_keys(cfg, defaults, "residue")
    cfg = _merge_defaults(cfg, defaults)
    n = int(cfg["n"])
    if cfg["surfaces"] is None:
        cfg["surfaces"] = [{"kind": "sphere", "radius": 4.0}]
    u = _build_field(cfg["solution"], n)
    fl = flux.FluxField(u, cfg["xi"])
    results = []
    for k, sspec in enumerate(cfg["surfaces"]):
        surf = _build_surface(sspec, n, seed)
        try:
            results.append(flux.residue(fl, surf, n))
        except DomainError as exc:
            raise ConfigError(f"surface #{k} ({surf.kind}) leaves the solution domain: {exc}")
    values = [r.value for r in results]
    max_dev = float(max(values) - min(values)) if len(values) > 1 else 0.0
    payload = {
        "results": [r.to_dict() for r in results],
        "max_pairwise_deviation": max_dev,
        "config": cfg,
        "timestamp": _utc_now(),
    }
    _write_json(Path(out_dir) / "residues.json", payload)
    return 0


def _verify_decay(cfg):
    sol = radial.RadialExteriorSolution(cfg["n"], cfg["a"], cfg["r0"], 0.0)
    prof = kelvin.radial_error_profile(sol, cfg["radii"])
    n = sol.n
    targets = (2 - n + 0.1, 1 - n + 0.1, -n + 0.1)
    orders = prof.orders()
    ok = all(o <= t for o, t in zip(orders, targets))
    return {
        "identity": "2.1",
        "radii": list(cfg["radii"]),
        "fitted_order": {"value": orders[0], "grad": orders[1], "hess": orders[2]},
        "thresholds": {"value": targets[0], "grad": targets[1], "hess": targets[2]},
        "pass": bool(ok),
    }


def _verify_linearized(cfg):
    sol = radial.RadialExteriorSolution(cfg["n"], cfg["a"], cfg["r0"], 0.0)
    u = fields.RadialSolutionField(sol)
    dirs = fit.shell_directions(sol.n, int(cfg["points"]), seed=cfg["seed"])
    reports = []
    worst = 0.0
    for r in cfg["radii"]:
        lin = kelvin.verify_linearization(u, r * dirs)
        worst = max(worst, lin.max_residual)
        reports.append({"radius": r, "max_residual": lin.max_residual,
                        "deviation_bound": lin.deviation_bound})
    return {
        "identity": "2.2",
        "radii": list(cfg["radii"]),
        "deviations": reports,
        "max_residual": worst,
        "pass": bool(worst <= 1e-8),
    }


def _verify_source_decay(cfg):
    sol = radial.RadialExteriorSolution(cfg["n"], cfg["a"], cfg["r0"], 0.0)
    u = fields.RadialSolutionField(sol)
    dirs = fit.shell_directions(sol.n, int(cfg["points"]), seed=cfg["seed"])
    rep = kelvin.source_decay_order(u, cfg["radii"], dirs)
    threshold = -2.0 * sol.n + 0.2
    return {
        "identity": "2.3",
        "radii": list(cfg["radii"]),
        "deviations": rep["g_max"],
        "fitted_order": rep["order"],
        "threshold": threshold,
        "pass": bool(rep["order"] <= threshold),
    }


def _verify_kelvin(cfg):
    sol = radial.RadialExteriorSolution(cfg["n"], cfg["a"], cfg["r0"], 0.0)
    E = kelvin.exterior_deviation_field(sol)
    g = lambda Y: radial.radial_laplacian_deviation(sol, np.sqrt(np.sum(np.asarray(Y) ** 2, -1)))
    dirs = fit.shell_directions(sol.n, int(cfg["points"]), seed=cfg["seed"])
    pts = np.concatenate([rho * dirs for rho in (0.15, 0.25, 0.4)])
    rep = kelvin.verify_kelvin_laplace_identity(E, g, pts, h=cfg["h"])
    return {
        "identity": "2.4",
        "points": rep["points"],
        "deviations": {"h": rep["max_dev_h"], "h/2": rep["max_dev_h2"]},
        "fitted_order": rep["observed_order"],
        "pass": bool(rep["observed_order"] >= 1.9),
    }


def _verify_flux_limit(cfg):
    rep = kelvin.verify_flux_expansion(cfg["c_tilde"], cfg["n"], cfg["radii"])
    return {
        "identity": "2.6",
        "radii": rep["radii"],
        "deviations": rep["integral_deviations"],
        "integral_values": rep["integral_values"],
        "fitted_order": rep["integral_order"],
        "pass": rep["pass"],
    }


def cmd_verify(cfg, out_dir, seed):
    defaults = {
        "identities": list(IDENTITY_TAGS),
        "n": 3,
        "a": 1.0,
        "r0": 1.0,
        "radii": [10.0, 20.0, 40.0, 80.0, 160.0],
        "c_tilde": -1.0 / 3.0,
        "points": 24,
        "h": 1e-3,
    }
    _check_keys(cfg, defaults, "verify")
    cfg = _merge_defaults(cfg, defaults)
    cfg["seed"] = seed
    runners = {
        "2.1": _verify_decay,
        "2.2": _verify_linearized,
        "2.3": _verify_source_decay,
        "2.4": _verify_kelvin,
        "2.6": _verify_flux_limit,
    }
    unknown = [t for t in cfg["identities"] if t not in runners]
    if unknown:
        raise ConfigError(f"unknown identity tags {unknown}; valid: {list(IDENTITY_TAGS)}")
    failed = []
    for tag in cfg["identities"]:
        report = runners[tag](cfg)
        report["config"] = {k: v for k, v in cfg.items() if k != "identities"}
        report["timestamp"] = _utc_now()
        _write_json(Path(out_dir) / f"verify_{tag.replace('.', '_')}.json", report)
        if not report["pass"]:
            failed.append(tag)
    summary = {
        "identities": cfg["identities"],
        "failed": failed,
        "pass": not failed,
        "config": cfg,
        "timestamp": _utc_now(),
    }
    _write_json(Path(out_dir) / "verify_summary.json", summary)
    if failed:
        print(f"verification failed for identities: {failed}", file=sys.stderr)
        return 1
    return 0


def cmd_solve_fit(cfg, out_dir, seed):
    defaults = {
        "n": 3,
        "annulus": [1.0, 16.0],
        "resolution": 64,
        "bc": {"family": "radial", "a": 1.0},
        "outer_bc": "exact",
        "shells": None,
        "points_per_shell": 64,
        "surface": None,
        "xi": "x1e1",
        "tol": 1e-10,
        "save_solution": False,
    }
    _check_keys(cfg, defaults, "solve-fit")
    cfg = _merge_defaults(cfg, defaults)
    n = int(cfg["n"])
    rin, rout = (float(v) for v in cfg["annulus"])
    grid = gridmod.AnnulusGrid(n, rin, rout, int(cfg["resolution"]))

    bc_field = _build_field(cfg["bc"], n)
    if cfg["outer_bc"] == "exact":
        outer = bc_field.value(grid.boundary_nodes("outer"))
    elif cfg["outer_bc"] == "expansion":
        if cfg["bc"].get("family") != "radial":
            raise ConfigError("outer_bc='expansion' needs a radial bc family")
        sol = radial.RadialExteriorSolution(
            n, cfg["bc"].get("a", 1.0), cfg["bc"].get("r0", 1.0), cfg["bc"].get("u0", 0.0)
        )
        exp_bc = radial.radial_expansion(sol)
        outer = solver.outer_bc_from_expansion(exp_bc, grid)
    else:
        raise ConfigError("outer_bc must be 'exact' or 'expansion'")
    inner = bc_field.value(grid.boundary_nodes("inner"))

    solution = solver.solve(grid, inner, outer, tol=float(cfg["tol"]))
    gf = solution.field()

    if cfg["shells"] is None:
        lo, hi = grid.interpolation_bounds()
        cfg["shells"] = np.geomspace(max(2.0 * rin, lo * 1.05), hi * 0.95, 5).tolist()
    samples = fit.sample_shells(
        gf, cfg["shells"], int(cfg["points_per_shell"]), seed=seed, source="grid",
        inner_radius=rin,
    )
    expansion = fit.fit_expansion(samples)

    if cfg["surface"] is None:
        mid = np.sqrt(max(2.0 * rin, grid.interpolation_bounds()[0]) * cfg["shells"][0])
        cfg["surface"] = {"kind": "sphere", "radius": float(round(mid, 6))}
    surf = _build_surface(cfg["surface"], n, seed)
    try:
        res = flux.residue(flux.FluxField(gf, cfg["xi"]), surf, n)
    except DomainError as exc:
        raise ConfigError(f"surface ({surf.kind}) leaves the grid annulus: {exc}")

    verdict = fit.check_expansion(expansion, res)
    out = Path(out_dir)
    if cfg["save_solution"]:
        gridmod.save_solution(solution, out / "solution")
    shell_csv = out / "shell_residuals.csv"
    shell_csv.parent.mkdir(parents=True, exist_ok=True)
    with shell_csv.open("w") as fh:
        fh.write("radius,residual_rms\n")
        for rr, rms in zip(expansion.shell_radii, expansion.shell_residuals):
            fh.write(f"{rr!r},{rms!r}\n")
    payload = {
        "verdict": verdict,
        "expansion": expansion.to_dict(),
        "residue": res.to_dict(),
        "newton": solution.newton_report.to_dict(),
        "config": cfg,
        "timestamp": _utc_now(),
    }
    _write_json(out / "verdict.json", payload)
    if not verdict["pass"]:
        print("solve-fit verdict failed", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "radial": cmd_radial,
    "residue": cmd_residue,
    "verify": cmd_verify,
    "solve-fit": cmd_solve_fit,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="extma",
        description="Exterior Hessian-determinant laboratory: residues, "
        "expansions, grid solves and identity checks.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for sampling/QMC rules")
    parser.add_argument("--threads", type=int, default=1,
                        help="kernel thread budget (reserved; kernels are single-threaded)")
    args = parser.parse_args(argv)

    if args.seed < 0 or args.threads < 1:
        print("--seed must be >= 0 and --threads >= 1", file=sys.stderr)
        return 2

    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return 2
        if not isinstance(cfg, dict):
            print("config root must be a JSON object", file=sys.stderr)
            return 2

    try:
        return COMMANDS[args.command](cfg, args.out, args.seed)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, ConvexityError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

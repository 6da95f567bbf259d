"""``hsl`` command line: one subcommand per construction, artifacts in ``--out``.

Exit status: 0 on success, 1 on a computation error (an ``error.json`` record
is written), 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from hsurflab import io
from hsurflab.config import COMMANDS, ConfigError, ExperimentConfig, load_config
from hsurflab.errors import HSurfError

log = logging.getLogger("hsl")


# ------------------------------------------------------------------ builders

def build_surface(spec: dict, field, resolution: int | None = None):
    """Discrete surface from a surface spec (see ``hsurflab.config``)."""
    from hsurflab.graph_solver import domain_from_spec, graph_surface, solve_dirichlet
    from hsurflab.rotational import (
        build_cap, build_flat_disk, build_hemisphere, build_sphere, round_sphere,
    )

    kind = spec["kind"]
    n = resolution or spec.get("n_rows", 64)
    if kind == "round-sphere":
        return round_sphere(spec.get("radius", 1.0), n)
    if kind == "rotational-sphere":
        return build_sphere(field, n)
    if kind == "hemisphere":
        return build_hemisphere(field, n)
    if kind == "flat-disk":
        return build_flat_disk(spec.get("radius", 1.0), n)
    if kind == "cap":
        return build_cap(spec.get("H0", 1.0), spec.get("radius", 0.5), n)
    if kind == "graph":
        dspec = dict(spec.get("domain", {"kind": "disk", "R": 0.5, "h": 1 / 64}))
        if resolution:
            dspec["h"] = 1.0 / resolution
        sol = solve_dirichlet(field, domain_from_spec(dspec), orientation=spec.get("orientation", "up"))
        return graph_surface(sol)
    raise ConfigError(f"unknown surface kind {kind!r}")


def _field(cfg: ExperimentConfig):
    from hsurflab.sphere_field import field_from_spec

    try:
        return field_from_spec(cfg.get("field"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad field spec: {exc}") from None


# ------------------------------------------------------------------ commands

def cmd_flat_curve(cfg, out: Path) -> dict:
    from hsurflab.flat_curves import detect_closure, integrate_flat_curve
    from hsurflab.plotting import plot_curve

    f = _field(cfg)
    basis = tuple(np.asarray(b, dtype=float) for b in cfg.get("plane", [[1, 0, 0], [0, 1, 0]]))
    step = 1.0 / cfg.resolution if cfg.resolution else cfg.get("step")
    sol = integrate_flat_curve(f, basis, cfg.get("theta0", 0.0), cfg.get("s_max"), step)
    summary = sol.summary()
    if sol.period_estimate is not None and np.isfinite(sol.closure_gap):
        closed, _ = detect_closure(sol, f)
        summary["closed"] = closed
        # least-squares circle through the samples: exact for constant fields
        p = sol.points
        A = np.column_stack([2 * p, np.ones(len(p))])
        (a, b, c), *_ = np.linalg.lstsq(A, np.sum(p * p, axis=1), rcond=None)
        radius = np.sqrt(c + a * a + b * b)
        summary["fit_radius"] = float(radius)
        summary["fit_deviation"] = float(np.max(np.abs(np.hypot(p[:, 0] - a, p[:, 1] - b) - radius)))
    io.write_columns(out / "curve.csv", {"s": sol.s, "theta": sol.theta,
                                         "x": sol.points[:, 0], "y": sol.points[:, 1]})
    plot_curve(out / "curve.svg", sol.points, "generating curve")
    return summary


def cmd_solve_graph(cfg, out: Path) -> dict:
    from hsurflab.graph_solver import (
        curvature_diagnostic, domain_from_spec, graph_surface, solve_dirichlet,
    )
    from hsurflab.plotting import plot_field

    f = _field(cfg)
    dspec = dict(cfg.get("domain"))
    if cfg.resolution:
        dspec["h"] = 1.0 / cfg.resolution
    try:
        dom = domain_from_spec(dspec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad domain spec: {exc}") from None
    sol = solve_dirichlet(f, dom, orientation=cfg.get("orientation", "up"))
    diag = sol.diagnostics()
    surf = graph_surface(sol)
    diag["curvature_distance_sup"] = curvature_diagnostic(sol, surf)[0]
    X, Y = dom.coords()
    m = dom.interior | dom.boundary
    io.write_columns(out / "graph.csv", {"x": X[m], "y": Y[m], "u": sol.u[m],
                                         "interior": dom.interior[m]})
    io.write_surface(out / "graph.obj", surf, {"H": surf.H, "K": surf.K})
    plot_field(out / "graph.svg", X, Y, sol.u, "u")
    return diag


def cmd_rotational(cfg, out: Path) -> dict:
    from hsurflab.plotting import plot_curve
    from hsurflab.rotational import curvature_residual

    f = _field(cfg)
    if f.zonal is None:
        raise ConfigError("rotational constructions need a zonal field")
    spec = cfg.get("surface")
    if spec["kind"] not in ("rotational-sphere", "hemisphere"):
        raise ConfigError("rotational surface kind must be rotational-sphere or hemisphere")
    surf = build_surface(spec, f, cfg.resolution)
    prof = surf.meta.get("profile")
    res = curvature_residual(surf, f)
    k = surf.kappa
    summary = {"kind": spec["kind"], "vertices": surf.n, "area": surf.area,
               "max_curvature_residual": float(np.max(res[surf.interior])),
               "strictly_convex": bool(np.all(k[surf.interior] > 0)),
               **{key: v for key, v in surf.meta.items() if isinstance(v, (int, float, bool, str))}}
    if prof is not None:
        summary["profile"] = prof.summary()
        io.write_columns(out / "profile.csv", {"s": prof.s, "x": prof.x, "z": prof.z,
                                               "theta": prof.theta})
        plot_curve(out / "profile.svg", np.column_stack([prof.x, prof.z]), "profile")
    io.write_surface(out / "surface.obj", surf, {"H": surf.H, "residual": res})
    return summary


def cmd_stability_report(cfg, out: Path) -> dict:
    from hsurflab.stability import export_triplets, stability_report

    f = _field(cfg)
    surf = build_surface(cfg.get("surface"), f, cfg.resolution)
    rep, raw = stability_report(surf, f)
    export_triplets(raw["operator"].matrix, out / "operator.txt")
    fields = {"Q": raw["Q"], "sigma2": surf.sigma2}
    if raw["psi"] is not None:
        psi = np.zeros(surf.n)
        idx = raw["operator"].interior if not surf.closed else np.ones(surf.n, bool)
        psi[idx] = raw["psi"]
        fields["psi"] = psi
    io.write_surface(out / "surface.obj", surf, fields)
    return rep.to_json()


def cmd_estrella(cfg, out: Path) -> dict:
    from hsurflab.sphere_field import estrella_constant

    f = _field(cfg)
    rep = estrella_constant(f, cfg.resolution or 2000)
    return {"c": rep.min_value, "argmin": rep.argmin, "certified": rep.certified,
            "radius_bound": rep.radius_bound if rep.certified else None,
            "samples": rep.grid_resolution, "polished": rep.polished}


def cmd_height_sweep(cfg, out: Path) -> dict:
    from hsurflab.graph_solver import height_experiment
    from hsurflab.plotting import plot_heights

    f = _field(cfg)
    h = 1.0 / cfg.resolution if cfg.resolution else cfg.get("h")
    tab = height_experiment(f, cfg.get("radii"), h, orientation=cfg.get("orientation", "up"),
                            method=cfg.get("method", "grid"))
    io.write_csv(out / "heights.csv", ["R", "height", "converged", "supremum"], tab.rows())
    plot_heights(out / "heights.svg", tab.sizes, tab.supremum, title="maximum height")
    return {"sizes": tab.sizes, "heights": tab.heights, "converged": tab.converged,
            "supremum": tab.supremum, "saturated": tab.saturated, "item5": tab.item5,
            "h": h, "method": cfg.get("method", "grid")}


def cmd_radius_sweep(cfg, out: Path) -> dict:
    from hsurflab.sphere_field import estrella_constant, radius_bound
    from hsurflab.stability import stability_certificate

    f = _field(cfg)
    c = estrella_constant(f).min_value
    rows = []
    for spec in cfg.get("surfaces"):
        surf = build_surface(spec, f, cfg.resolution)
        rad = surf.intrinsic_radius()
        cert = stability_certificate(surf, f).status
        bound = radius_bound(c)
        rows.append((spec["kind"], surf.n, rad, bound, cert, bool(rad <= bound)))
    io.write_csv(out / "radius.csv", ["kind", "vertices", "radius", "bound", "stability", "within"],
                 rows)
    return {"c": c, "surfaces": [dict(zip(("kind", "vertices", "radius", "bound", "stability",
                                           "within"), r)) for r in rows]}


def cmd_flux(cfg, out: Path) -> dict:
    from hsurflab.stability import flux_integral

    f = _field(cfg)
    surf = build_surface(cfg.get("surface"), f, cfg.resolution)
    if not surf.closed:
        raise ConfigError("flux needs a closed surface")
    v = np.asarray(cfg.get("v"), dtype=float)
    val = flux_integral(surf, f, v / np.linalg.norm(v))
    return {"integral": val, "area": surf.area, "relative": val / surf.area, "v": v}


def cmd_reproduce(cfg, out: Path, echo=print) -> dict:
    from hsurflab.acceptance import run_suite

    try:
        results = run_suite(cfg.quick, cfg.tolerances, cfg.get("criteria"), cfg.seed, echo=echo)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    rows = [(r.number, r.name, r.passed, r.runtime, r.note) for r in results]
    io.write_csv(out / "acceptance.csv", ["criterion", "name", "passed", "runtime_s", "note"], rows)
    failed = [r.number for r in results if not r.passed]
    return {"quick": cfg.quick, "criteria": [r.to_json() for r in results], "failed": failed}


HANDLERS = {
    "flat-curve": cmd_flat_curve,
    "solve-graph": cmd_solve_graph,
    "rotational": cmd_rotational,
    "stability-report": cmd_stability_report,
    "estrella": cmd_estrella,
    "height-sweep": cmd_height_sweep,
    "radius-sweep": cmd_radius_sweep,
    "flux": cmd_flux,
    "reproduce": cmd_reproduce,
}

HELP = {
    "flat-curve": "integrate the generating curve of a flat cylinder",
    "solve-graph": "solve the Dirichlet problem for a graph",
    "rotational": "build a rotational sphere or hemisphere for a zonal field",
    "stability-report": "stability operator, principal eigenvalue and radius data",
    "estrella": "minimum of the estrella expression over the sphere",
    "height-sweep": "maximum graph heights over growing disks",
    "radius-sweep": "intrinsic radius against the estrella bound",
    "flux": "flux integral over a closed surface",
    "reproduce": "run the acceptance suite",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment JSON file")
    common.add_argument("--out", type=Path, help="output directory (default hsl-out)")
    common.add_argument("--quick", action="store_true", default=None,
                        help="reduced resolutions and widened tolerances")
    common.add_argument("--seed", type=int, help="seed for randomized sweeps")
    common.add_argument("--resolution", type=int,
                        help="grid rows, 1/h, steps per unit length or sample count")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="hsl", description="prescribed mean curvature lab")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "reproduce":
            sp.add_argument("--criteria", type=int, nargs="+", help="subset of criteria")
            sp.add_argument("--tolerance", action="append", default=[], metavar="N.NAME=VALUE",
                            help="override one tolerance, e.g. 3.min_ratio=4")
    return p


def _tolerance_overrides(items):
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        try:
            out[key] = float(val)
        except ValueError:
            raise ConfigError(f"bad tolerance override {item!r}") from None
        if not sep:
            raise ConfigError(f"bad tolerance override {item!r}")
    return out


def _thread_limit():
    val = os.environ.get("HSL_THREADS")
    if not val:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    try:
        n = int(val)
    except ValueError:
        raise ConfigError("HSL_THREADS must be a positive integer") from None
    if n < 1:
        raise ConfigError("HSL_THREADS must be a positive integer")
    return threadpool_limits(limits=n)


def _usage_error(msg: str) -> int:
    print(f"hsl: error: {msg}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"out": None if args.out is None else str(args.out), "quick": args.quick,
                 "seed": args.seed, "resolution": args.resolution}
    try:
        if args.command == "reproduce":
            overrides["criteria"] = args.criteria
            tol = _tolerance_overrides(args.tolerance)
            if tol:
                overrides["tolerances"] = tol
        cfg = load_config(args.config, args.command, overrides)
        limit = _thread_limit()
    except ConfigError as exc:
        return _usage_error(str(exc))
    out = io.ensure_dir(cfg.out)
    try:
        with limit:
            result = HANDLERS[cfg.command](cfg, out)
    except ConfigError as exc:
        return _usage_error(str(exc))
    except (HSurfError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        record = {"command": cfg.command, "error": getattr(exc, "code", type(exc).__name__),
                  "message": str(exc)}
        io.write_json(out / "error.json", record)
        print(io.dumps(record), end="", file=sys.stderr)
        return 1
    # the output path is left out so results do not depend on where they are written
    stored = {k: v for k, v in cfg.data.items() if k != "out"}
    io.write_json(out / "summary.json", {"command": cfg.command, "seed": cfg.seed,
                                         "config": stored, "result": result})
    if cfg.command == "reproduce":
        if result["failed"]:
            print("failed criteria: " + ", ".join(map(str, result["failed"])), file=sys.stderr)
            return 1
        return 0
    print(io.dumps(result), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())

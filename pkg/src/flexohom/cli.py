"""Command-line entry point: ``flexohom <command> [options]``."""
import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .constitutive import GEN_LABELS
from .homogenization import RVE, HomogenizationError, effective_tangents, parameter_sweep
from .mesh import MeshError, classify_boundary, jitter_interior, porosity, read_mesh, rectangle_mesh, write_mesh
from .output import (
    _write_rows,
    merge_sweep_staging,
    write_effective,
    write_fields,
    write_report,
    write_sweep,
    write_sweep_row,
)
from .two_scale import MacroProblemError, macro_snapshot_at_points, run_two_scale
from .verify import run_checks

log = logging.getLogger("flexohom")


class CommandError(RuntimeError):
    pass


def _global_flags(p, suppress=False):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="TOML run configuration")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory (overrides run.output_dir)")
    p.add_argument("--threads", metavar="N", type=int, default=d, help="worker threads for sweeps")
    p.add_argument("--seed", metavar="N", type=int, default=d, help="perturb interior mesh nodes with this seed")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser():
    parser = argparse.ArgumentParser(prog="flexohom", description="Flexoelectric RVE homogenization with Bell triangles.")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = cmd("verify", "element-level self checks")
    p.add_argument("--trials", type=int, default=5)
    cmd("homogenize", "effective 11x11 tangent of the configured RVE")
    cmd("sweep", "parameter sweep over the configured RVE")
    cmd("two-scale", "macro solve with the homogenized tangent and localization")
    p = cmd("mesh", "generate the configured RVE mesh or inspect a mesh file")
    p.add_argument("action", choices=("generate", "inspect"))
    p.add_argument("path", nargs="?", help="mesh file to inspect")
    return parser


def _config(args) -> RunConfig:
    if not args.config:
        raise CommandError(f"'{args.command}' needs --config PATH")
    cfg = load_config(args.config)
    if args.out:
        cfg.output_dir = args.out
    if args.threads:
        cfg.threads = args.threads
    return cfg


def _out_dir(cfg_or_none, args):
    d = Path(args.out or (cfg_or_none.output_dir if cfg_or_none else "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _maybe_jitter(mesh, args):
    if args.seed is None:
        return mesh
    return jitter_interior(mesh, np.random.default_rng(args.seed))


def _check_residuals(res, tol, what):
    worst = float(np.max(res, initial=0.0))
    if worst > tol:
        raise CommandError(f"{what}: relative residual {worst:.3e} exceeds run.residual_tol = {tol:g}")
    return worst


def cmd_verify(args):
    t0 = time.perf_counter()
    checks = run_checks(seed=args.seed or 0, trials=args.trials)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tol:g})")
    print(f"{time.perf_counter() - t0:.2f} s")
    if args.out:
        _write_rows(
            _out_dir(None, args) / "verify.csv",
            ["check", "value", "tolerance", "passed"],
            [[c.name, float(c.value), c.tol, int(c.passed)] for c in checks],
        )
    return 0 if all(c.passed for c in checks) else 1


def cmd_homogenize(args):
    cfg = _config(args)
    out = _out_dir(cfg, args)
    mesh = _maybe_jitter(cfg.rve_mesh(), args)
    tan = effective_tangents(mesh, cfg.materials, cfg.bc, cfg.degree)
    worst = _check_residuals(tan.residuals, cfg.residual_tol, "homogenize")
    write_effective(tan, out / "effective.csv")
    write_report(tan.report(), out / "coefficients.csv")
    _write_rows(
        out / "hill_mandel.csv",
        ["case", "gap", "residual"],
        [[GEN_LABELS[j], tan.hill_mandel[j], tan.residuals[j]] for j in range(len(GEN_LABELS))],
    )
    print(f"{mesh.n_elements} elements, {cfg.bc}; max residual {worst:.2e}, max Hill-Mandel gap {tan.hill_mandel.max():.2e}")
    for k, v in tan.report().items():
        print(f"  {k:8s} {v: .10e}")
    print(f"wrote {out / 'effective.csv'}")
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    if cfg.sweep is None:
        raise CommandError("config has no [sweep] section")
    out = _out_dir(cfg, args)
    staging = out / ".staging"
    staging.mkdir(exist_ok=True)
    paths = [staging / f"case_{i:04d}.csv" for i in range(len(cfg.sweep.values))]

    def on_row(i, row):
        write_sweep_row(row, paths[i])
        print(f"  {row['variable']} = {row['value']}: {row['status']}", flush=True)

    rows = parameter_sweep(cfg.sweep, threads=cfg.threads, on_row=on_row)
    target = out / "sweep.csv"
    if paths:
        merge_sweep_staging(paths, target)
    else:
        write_sweep([], target)
    staging.rmdir()
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"wrote {target} ({len(rows)} rows, {len(failed)} failed)")
    return 1 if failed else 0


def cmd_two_scale(args):
    cfg = _config(args)
    if cfg.macro is None:
        raise CommandError("config has no [macro] section")
    m = cfg.macro
    out = _out_dir(cfg, args)
    rve = RVE(_maybe_jitter(cfg.rve_mesh(), args), cfg.materials, cfg.bc, cfg.degree)
    macro_mesh = rectangle_mesh(m.width, m.height, m.nx, m.ny)
    res = run_two_scale(macro_mesh, rve, m.dirichlet, m.loads, m.localize, cfg.degree)
    _check_residuals(res.tangents.residuals, cfg.residual_tol, "RVE tangent")
    _check_residuals([res.macro.residual], cfg.residual_tol, "macro solve")
    write_effective(res.tangents, out / "effective.csv")
    snaps = [res.macro.snapshot("macro")] + [loc.snapshot for loc in res.localizations]
    write_fields(snaps, out / "fields.dat", "tecplot")
    write_fields(snaps, out / "fields.csv", "csv")
    write_fields(macro_snapshot_at_points(res.macro), out / "macro_qp.csv", "csv")
    header = ["element", "point"] + [f"macro_{c}" for c in GEN_LABELS] + ["consistency_error", "hill_mandel_gap"]
    rows = []
    for loc in res.localizations:
        a = loc.macro.as_vector()
        gap = abs(loc.result.microEnergy - loc.result.generalized_stress @ a) / max(abs(loc.result.microEnergy), 1e-30)
        rows.append([loc.request.element, loc.request.point] + list(a) + [loc.consistency_error, gap])
    _write_rows(out / "localization.csv", header, rows)
    print(
        f"macro {macro_mesh.n_elements} elements (residual {res.macro.residual:.1e}); "
        f"{len(res.localizations)} localizations, max consistency error {res.max_consistency_error():.2e}; "
        f"RVE tangents computed {res.cache.computations}x"
    )
    print(f"wrote {out / 'fields.dat'}")
    return 0


def _mesh_summary(mesh):
    b = classify_boundary(mesh)
    xy = mesh.element_coords()
    ang = []
    for k in range(3):
        p, q = xy[:, (k + 1) % 3] - xy[:, k], xy[:, (k + 2) % 3] - xy[:, k]
        c = np.einsum("ed,ed->e", p, q) / np.linalg.norm(p, axis=1) / np.linalg.norm(q, axis=1)
        ang.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
    lo, hi = mesh.bbox
    print(f"nodes {mesh.n_nodes}, triangles {mesh.n_elements}")
    print(f"box [{lo[0]:g}, {hi[0]:g}] x [{lo[1]:g}, {hi[1]:g}], area {mesh.area():.6g}, porosity {porosity(mesh):.6g}")
    print(f"regions {dict(sorted(mesh.region_names.items()))}")
    print(f"boundary nodes: left {len(b.left)}, right {len(b.right)}, bottom {len(b.bottom)}, top {len(b.top)}")
    print(f"minimum angle {np.min(ang):.2f} deg")


def cmd_mesh(args):
    if args.action == "inspect":
        if not args.path:
            raise CommandError("mesh inspect needs a mesh file path")
        mesh = read_mesh(args.path).validate()
        _mesh_summary(mesh)
        return 0
    cfg = _config(args)
    out = _out_dir(cfg, args)
    mesh = _maybe_jitter(cfg.rve_mesh(), args).validate()
    write_mesh(mesh, out / "rve.mesh")
    _mesh_summary(mesh)
    print(f"wrote {out / 'rve.mesh'}")
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "homogenize": cmd_homogenize,
    "sweep": cmd_sweep,
    "two-scale": cmd_two_scale,
    "mesh": cmd_mesh,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CommandError, MeshError, MacroProblemError, HomogenizationError, OSError) as exc:
        print(f"flexohom {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

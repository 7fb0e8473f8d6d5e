import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.config import (
    DEFAULT_GAMMA0,
    DEFAULT_GAMMA1,
    DEFAULT_LEVELS,
    DEFAULT_SEED,
    DEFAULT_SOLVER,
    DEFAULT_SOLVER_TOL,
    EXIT_MESH,
    EXIT_OK,
)
from src.errors import VemError
from src.mesh import MESH_FAMILIES, Domain, check_regularity, family_mesh, read_mesh, write_mesh
from src.postproc import classify_elements
from src.render import render_mesh_png
from src.study import PROBLEMS, StudyConfig, default_subdomain, run_study
from src.system import SOLVERS

logger = logging.getLogger("vem")


def _cmd_study(args: argparse.Namespace) -> int:
    config = StudyConfig(
        problem=args.problem,
        family=args.mesh,
        k=args.k,
        m=args.m,
        levels=args.levels,
        first_level=args.first_level,
        rng_seed=args.seed,
        solver=args.solver,
        tol=args.tol,
        out_dir=args.out,
        plot=not args.no_plot,
        deterministic=args.deterministic,
        workers=args.workers,
        quad_offset=args.quad_offset,
        gamma0=args.gamma0,
        gamma1=args.gamma1,
    )
    table = run_study(config)
    print(table.format())
    if args.out is not None:
        print(f"Results written to {args.out / (config.stem + '.csv')}")
    return EXIT_OK


def _cmd_mesh(args: argparse.Namespace) -> int:
    mesh = family_mesh(args.family, Domain(args.domain), args.level, rng_seed=args.seed)
    write_mesh(mesh, args.out)
    print(f"{mesh.n_cells} cells, {mesh.n_vertices} vertices, h = {mesh.h:.6g} -> {args.out}")
    if args.png is not None:
        options = {}
        if args.disk:
            sub = default_subdomain(mesh.domain)
            inner, _ = classify_elements(mesh, sub)
            options = {"highlight": inner, "disk": (sub.center, sub.radius)}
        render_mesh_png(mesh, args.png, **options)
        print(f"Preview saved to {args.png}")
    return EXIT_OK


def _cmd_check_mesh(args: argparse.Namespace) -> int:
    mesh = read_mesh(args.file)
    report = check_regularity(mesh, args.gamma0, args.gamma1)
    print(f"{mesh.n_cells} cells on {mesh.domain.value}, h = {mesh.h:.6g}")
    print(f"gamma0 observed {report.gamma0_observed:.4g} (required {args.gamma0})")
    print(f"gamma1 observed {report.gamma1_observed:.4g} (required {args.gamma1})")
    print(f"quasi-uniformity h_max/h_min = {report.quasi_uniformity:.4g}")
    if not report.ok:
        print(f"{len(report.violations)} cells violate the thresholds: {list(report.violations[:20])}")
        return EXIT_MESH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vem", description="Virtual element convergence studies on polygonal meshes"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="run a convergence study")
    study.add_argument("--problem", default="square", choices=sorted(PROBLEMS))
    study.add_argument("--mesh", default="hex", choices=sorted(MESH_FAMILIES))
    study.add_argument("--k", type=int, default=1)
    study.add_argument("--m", type=int, default=None, help="interior moment order (default: k)")
    study.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    study.add_argument("--first-level", type=int, default=2, dest="first_level")
    study.add_argument("--seed", type=int, default=DEFAULT_SEED)
    study.add_argument("--solver", default=DEFAULT_SOLVER, choices=SOLVERS)
    study.add_argument("--tol", type=float, default=DEFAULT_SOLVER_TOL)
    study.add_argument("--deterministic", action="store_true", help="sequential, reproducible output")
    study.add_argument("--workers", type=int, default=1)
    study.add_argument("--quad-offset", type=int, default=0, dest="quad_offset")
    study.add_argument("--gamma0", type=float, default=DEFAULT_GAMMA0)
    study.add_argument("--gamma1", type=float, default=DEFAULT_GAMMA1)
    study.add_argument("--out", type=Path, default=None, help="directory for CSV and SVG output")
    study.add_argument("--no-plot", action="store_true", dest="no_plot")
    study.set_defaults(handler=_cmd_study)

    mesh = sub.add_parser("mesh", help="generate a mesh file")
    mesh.add_argument("--domain", default="square", choices=[d.value for d in Domain])
    mesh.add_argument("--family", default="hex", choices=sorted(MESH_FAMILIES))
    mesh.add_argument("--level", type=int, default=2)
    mesh.add_argument("--seed", type=int, default=DEFAULT_SEED)
    mesh.add_argument("--out", type=Path, required=True)
    mesh.add_argument("--png", type=Path, default=None, help="also save a PNG preview")
    mesh.add_argument("--disk", action="store_true", help="mark the error disk and its inner cells in the preview")
    mesh.set_defaults(handler=_cmd_mesh)

    check = sub.add_parser("check-mesh", help="validate a mesh file and report its regularity")
    check.add_argument("file", type=Path)
    check.add_argument("--gamma0", type=float, default=DEFAULT_GAMMA0)
    check.add_argument("--gamma1", type=float, default=DEFAULT_GAMMA1)
    check.set_defaults(handler=_cmd_check_mesh)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.handler(args)
    except VemError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Command line driver: ``ttkinetic {shock,cylinder,custom} [options]``.

Exit status: 0 when the run converged, 2 when it stopped at ``--max-iters``,
1 on bad input (flags, config, mesh) or a nonphysical state.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .cases import build_case, cylinder_config
from .mesh import MeshError
from .output import cell_fields, write_ray_csv, write_summary, write_vtk
from .physics import StateError
from .reference import DenseScheme
from .solver import Scheme, SolverConfig, rank_ratio

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--dense", action="store_true", help="use the full-tensor reference solver")
    p.add_argument("--eps", type=float, help="TT rounding accuracy (default 1e-7)")
    p.add_argument("--nv", type=int, help="velocity nodes per axis")
    p.add_argument("--cfl", type=float, help="Courant number")
    p.add_argument("--scheme", choices=("explicit", "lusgs"))
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float, help="residual tolerance (default 1e-6)")
    p.add_argument("--out", type=Path, default=Path("run_out"), help="output directory")
    p.add_argument("--ray", type=float, nargs=6, metavar=("X", "Y", "Z", "DX", "DY", "DZ"),
                   help="also write cell data sampled along this ray to ray.csv")
    p.add_argument("-v", "--verbose", action="store_true")


def make_parser():
    parser = _Parser(prog="ttkinetic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("shock", help="planar normal shock in argon")
    p.add_argument("--mach", type=float, default=2.0)
    p.add_argument("--cells", type=int, default=100)
    p.add_argument("--n-up", type=float, default=1e20, help="upstream number density [1/m^3]")
    p.add_argument("--T-up", type=float, default=273.0, help="upstream temperature [K]")
    _common(p)

    p = sub.add_parser("cylinder", help="Mach 10 argon flow past a cylinder")
    p.add_argument("--mesh", type=Path, required=True, help="StarCD mesh directory")
    _common(p)

    p = sub.add_parser("custom", help="run from a JSON configuration file")
    p.add_argument("config", type=Path)
    _common(p)
    return parser


def resolve_config(args) -> dict:
    """Fully resolved run configuration; re-running it reproduces the run."""
    if args.command == "shock":
        cfg = {
            "case": "shock",
            "shock": {"mach": args.mach, "n_cells": args.cells, "n_up": args.n_up, "T_up": args.T_up},
            "grid": {"n_v": args.nv or 32},
        }
    elif args.command == "cylinder":
        cfg = cylinder_config(args.mesh, n_v=args.nv or 32)
    else:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
    cfg.setdefault("solver", {})
    cfg.setdefault("dense", False)
    if args.nv is not None and args.command == "custom":
        cfg.setdefault("grid", {})["n_v"] = args.nv
    solver = cfg["solver"]
    for flag, key in (("eps", "eps_round"), ("cfl", "cfl"), ("scheme", "scheme"),
                      ("max_iters", "max_iters"), ("tol", "residual_tol")):
        if getattr(args, flag) is not None:
            solver[key] = getattr(args, flag)
    if args.dense:
        cfg["dense"] = True
    if args.ray is not None:
        cfg["ray"] = {"origin": list(args.ray[:3]), "direction": list(args.ray[3:])}
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(solver) - known
    if unknown:
        raise InputError(f"solver: unknown keys {sorted(unknown)}")
    try:
        cfg["solver"] = asdict(SolverConfig(**solver))
    except (TypeError, ValueError) as exc:
        raise InputError(f"solver: {exc}") from None
    return cfg


def run(cfg: dict, out: Path):
    """Build and run the configured case, write outputs; return the summary dict."""
    try:
        case = build_case(cfg)
    except (KeyError, TypeError, ValueError, MeshError) as exc:
        raise InputError(str(exc)) from None
    solver_cfg = SolverConfig(**cfg["solver"])
    dense = bool(cfg.get("dense"))
    scheme_cls = DenseScheme if dense else Scheme
    scheme = scheme_cls(case.mesh, case.grid, case.gas, case.problem, solver_cfg)
    t0 = time.perf_counter()
    state, report = scheme.run()
    wall = time.perf_counter() - t0

    n_v = case.grid.n
    if dense:
        ratio = np.full(case.mesh.n_cells, (n_v * n_v + 2 * n_v) / float(n_v * n_v))
    else:
        ratio = rank_ratio(state, n_v)
    data = cell_fields(state.fields, ratio)

    out.mkdir(parents=True, exist_ok=True)
    write_vtk(out / "solution.vtk", case.mesh, data, title=f"ttkinetic {case.name}")
    n_ray = None
    if "ray" in cfg:
        n_ray = write_ray_csv(out / "ray.csv", case.mesh, data, cfg["ray"]["origin"], cfg["ray"]["direction"])
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    summary = {
        "case": case.name,
        "solver": "dense" if dense else "tt",
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": report.residuals[-1] if report.residuals else None,
        "residuals": report.residuals,
        "compression_ratio": report.compression_ratio,
        "max_rank": report.max_rank,
        "seconds_per_iter": report.seconds_per_iter,
        "wall_seconds": wall,
        "n_cells": case.mesh.n_cells,
        "ray_samples": n_ray,
        "config": cfg,
    }
    write_summary(out / "summary.txt", summary)
    return summary


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        summary = run(cfg, args.out)
    except InputError as exc:
        parser.print_usage(sys.stderr)
        print(f"ttkinetic: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StateError as exc:
        print(f"ttkinetic: nonphysical state: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(
        f"{summary['case']}: {'converged' if summary['converged'] else 'not converged'} after "
        f"{summary['iterations']} iterations, residual {summary['final_residual']:.3e}, "
        f"compression {summary['compression_ratio']:.1f}x"
    )
    return EXIT_OK if summary["converged"] else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())

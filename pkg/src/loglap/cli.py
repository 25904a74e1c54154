"""Command-line interface: constants, assemble, eig, curve, verify, fracexp, nonres.

Each data-producing subcommand writes delimited text plus a manifest into
the output directory and exits 0 iff every recorded status converged.  The
log level comes from the LOGLAP_LOG_LEVEL environment variable only.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, config_hash, emit_config, parse_config
from .constants import c_of_N, d_of_N, rho_of_N
from .discretization import assemble, build_mesh
from .fractional import expansion_error
from .fucik import (MountainPassOptions, TraceOptions, curve_point_at,
                    trace_curve, verify_pair)
from .nonresonance import NonresonanceOptions, default_spec, solve_nonresonance
from .runio import (OutputLock, ResultManifest, export_matrix_dense,
                    export_matrix_triplet, export_node_list, fmt12,
                    write_delimited, write_status)
from .spectral import solve_eig

logger = logging.getLogger("loglap.cli")


def _setup_logging() -> None:
    level = os.environ.get("LOGLAP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(args) -> RunConfig:
    text = ""
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    cfg = parse_config(text)
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _outdir(cfg: RunConfig, args) -> str:
    directory = getattr(args, "out", None) or cfg["output.dir"]
    os.makedirs(directory, exist_ok=True)
    return directory


def _pipeline(cfg: RunConfig):
    domain = cfg.domain()
    mesh = build_mesh(domain, cfg["mesh.n"])
    forms = assemble(mesh, cfg.quadspec(),
                     consistency_tol=cfg["tol.quad_consistency"])
    return mesh, forms


def _auto_grid(cfg: RunConfig, lam1: float, lam2: float) -> np.ndarray:
    r_max = cfg["curve.r_max"]
    if r_max is None:
        r_max = 10.0 * (lam2 - lam1)
    return np.linspace(0.0, r_max, cfg["curve.steps"])


def _resolve_nonres_r(cfg: RunConfig, lam1: float, lam2: float) -> float:
    r = cfg["nonres.r"]
    return (lam2 - lam1) if r is None else r


# ---------------------------------------------------------------------------
# subcommand handlers (return the exit code)
# ---------------------------------------------------------------------------

def _cmd_constants(args) -> int:
    n = args.dim
    print(f"c_N   = {fmt12(c_of_N(n))}")
    print(f"rho_N = {fmt12(rho_of_N(n))}")
    print(f"d_N   = {fmt12(d_of_N(n))}")
    return 0


def _cmd_assemble(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        manifest.timings["assemble"] = time.perf_counter() - t0
        for name, mat in (("A", forms.A), ("M", forms.M)):
            trip = os.path.join(outdir, f"matrix_{name}.txt")
            dense = os.path.join(outdir, f"matrix_{name}.bin")
            export_matrix_triplet(trip, mat, h, name=name)
            export_matrix_dense(dense, mat)
            manifest.add_output("assemble", trip)
            manifest.add_output("assemble", dense)
        nodes_path = os.path.join(outdir, "mesh_nodes.txt")
        export_node_list(nodes_path, mesh.nodes, h)
        manifest.add_output("assemble", nodes_path)
        manifest.statuses["assemble"] = "done"
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
    return 0 if manifest.all_converged() else 1


def _cmd_eig(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        pairs = solve_eig(forms, cfg["eig.k"], theta=cfg["eig.dead_zone"])
        manifest.timings["eig"] = time.perf_counter() - t0
        table = os.path.join(outdir, "eig.csv")
        write_delimited(table, ("k", "lambda", "sign_class", "residual"),
                        [(p.index, p.lam, p.sign_class, p.residual) for p in pairs],
                        h)
        manifest.add_output("eig", table)
        if args.dump_vectors:
            vec_path = os.path.join(outdir, "eig_vectors.csv")
            cols = ["node"] + [f"u{p.index}" for p in pairs]
            rows = [[mesh.nodes[i]] + [p.vector[i] for p in pairs]
                    for i in range(mesh.n)]
            write_delimited(vec_path, cols, rows, h)
            manifest.add_output("eig", vec_path)
        if args.plot:
            from .plotting import render_eig
            png = render_eig(pairs, mesh, os.path.join(outdir, "eig.png"))
            manifest.add_output("eig", png)
        ok = all(p.residual <= cfg["tol.residual"] for p in pairs)
        manifest.statuses["eig"] = "converged" if ok else "failed"
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
    return 0 if manifest.all_converged() else 1


def _cmd_curve(args) -> int:
    cfg = _load_config(args)
    if args.r_max is not None:
        cfg.values["curve.r_max"] = args.r_max
    if args.steps is not None:
        cfg.values["curve.steps"] = args.steps
    if args.mesh_n is not None:
        cfg.values["mesh.n"] = args.mesh_n
    if args.path_m is not None:
        cfg.values["path.m"] = args.path_m
    if args.strategy is not None:
        cfg.values["curve.strategy"] = args.strategy
    if args.tol_grad is not None:
        cfg.values["tol.grad"] = args.tol_grad
    if args.tol_residual is not None:
        cfg.values["tol.residual"] = args.tol_residual
    if args.r_min not in (None, 0.0):
        raise SystemExit("curve grids start at r = 0 (see documentation)")
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        pairs = solve_eig(forms, 2, theta=cfg["eig.dead_zone"])
        grid = _auto_grid(cfg, pairs[0].lam, pairs[1].lam)
        mp = MountainPassOptions(m=cfg["path.m"],
                                 max_sweeps=cfg["solver.max_sweeps"],
                                 step_safety=cfg["solver.step_safety"],
                                 grad_tol_rel=cfg["tol.grad"])
        curve = trace_curve(forms, grid,
                            TraceOptions(strategy=cfg["curve.strategy"], mp=mp),
                            eigenpairs=pairs)
        manifest.timings["curve"] = time.perf_counter() - t0
        table = os.path.join(outdir, "curve.csv")
        write_delimited(
            table, ("r", "alpha", "beta", "c", "residual", "iters", "converged"),
            [(p.r, p.alpha, p.beta, p.c, p.residual, p.iterations,
              int(p.converged)) for p in curve.points],
            h, extra={"lam1": fmt12(curve.lam1), "lam2": fmt12(curve.lam2)})
        manifest.add_output("curve", table)
        if args.dump_eigenfunctions:
            fn = os.path.join(outdir, "curve_eigenfunctions.csv")
            cols = ["node"] + [f"p{i}" for i in range(len(curve.points))]
            rows = [[mesh.nodes[i]] + [p.eigenfunction[i] for p in curve.points]
                    for i in range(mesh.n)]
            write_delimited(fn, cols, rows, h)
            manifest.add_output("curve", fn)
        if args.plot:
            from .plotting import render_curve
            png = render_curve(curve, os.path.join(outdir, "curve.png"))
            manifest.add_output("curve", png)
        manifest.statuses["curve"] = ("converged" if curve.all_converged
                                      else "failed")
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
    return 0 if manifest.all_converged() else 1


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        if args.seed_file:
            seed = np.loadtxt(args.seed_file, comments="#", ndmin=1)
            if seed.shape != (mesh.n,):
                raise SystemExit(
                    f"seed file must hold {mesh.n} node values, got {seed.shape}")
        else:
            rng = np.random.default_rng(cfg["seed"])
            seed = rng.standard_normal(mesh.n)
        result = verify_pair(forms, args.alpha, args.beta, seed)
        manifest.timings["verify"] = time.perf_counter() - t0
        tol = args.tol if args.tol is not None else cfg["tol.residual"]
        accepted = result.residual <= tol
        out = os.path.join(outdir, "verify.txt")
        write_delimited(out, ("alpha", "beta", "residual", "iterations", "accepted"),
                        [(args.alpha, args.beta, result.residual,
                          result.iterations, int(accepted))], h)
        manifest.add_output("verify", out)
        manifest.statuses["verify"] = "converged" if accepted else "failed"
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
        print(f"residual = {fmt12(result.residual)} "
              f"({'accepted' if accepted else 'rejected'} at tol {fmt12(tol)})")
    return 0 if accepted else 1


def _cmd_fracexp(args) -> int:
    cfg = _load_config(args)
    if args.s_list:
        cfg.values["fracexp.s_list"] = tuple(float(s) for s in args.s_list.split(","))
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        rows = expansion_error(forms, mesh, cfg["fracexp.s_list"], cfg.quadspec())
        manifest.timings["fracexp"] = time.perf_counter() - t0
        ratios = [b[1] / a[1] for a, b in zip(rows, rows[1:])]
        if any(not 0.25 <= q <= 0.9 for q in ratios):
            logger.info("e_form decay ratios outside [0.25, 0.9]: %s",
                        [f"{q:.3f}" for q in ratios])
        table = os.path.join(outdir, "fracexp.csv")
        write_delimited(table, ("s", "e_form", "e_eig"), rows, h)
        manifest.add_output("fracexp", table)
        if args.plot:
            from .plotting import render_fracexp
            png = render_fracexp(rows, os.path.join(outdir, "fracexp.png"))
            manifest.add_output("fracexp", png)
        manifest.statuses["fracexp"] = "done"
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
    return 0 if manifest.all_converged() else 1


def _cmd_nonres(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(cfg, args)
    h = config_hash(cfg)
    with OutputLock(outdir):
        manifest = ResultManifest(cfg_hash=h, config_text=emit_config(cfg))
        t0 = time.perf_counter()
        mesh, forms = _pipeline(cfg)
        pairs = solve_eig(forms, 2, theta=cfg["eig.dead_zone"])
        r_target = _resolve_nonres_r(cfg, pairs[0].lam, pairs[1].lam)
        point = curve_point_at(forms, pairs, r_target)
        spec = default_spec(pairs[0].lam, (point.alpha, point.beta), mesh.n,
                            fraction=cfg["nonres.fraction"],
                            eps=cfg["nonres.eps"], kappa=cfg["nonres.kappa"])
        opts = NonresonanceOptions(m=cfg["path.m"],
                                   grad_tol_rel=cfg["tol.grad"],
                                   margin=cfg["nonres.margin"])
        result = solve_nonresonance(spec, forms, pairs, opts)
        manifest.timings["nonres"] = time.perf_counter() - t0
        sol = os.path.join(outdir, "nonres_solution.txt")
        export_node_list(sol, result.u, h)
        manifest.add_output("nonres", sol)
        summary = os.path.join(outdir, "nonres_summary.csv")
        write_delimited(summary, ("psi", "grad_norm", "R", "norm_u", "converged"),
                        [(result.psi_value, result.grad_norm, result.R,
                          result.norm_u, int(result.converged))], h,
                        extra={"target": f"{fmt12(point.alpha)},{fmt12(point.beta)}",
                               "slopes": f"{fmt12(spec.slopes[0])},{fmt12(spec.slopes[1])}"})
        manifest.add_output("nonres", summary)
        manifest.statuses["nonres"] = "converged" if result.converged else "failed"
        manifest.write(outdir)
        write_status(outdir, manifest.statuses)
    return 0 if manifest.all_converged() else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="configuration file (flat dotted keys)")
    sub.add_argument("--out", help="output directory (overrides output.dir)")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one configuration key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loglap",
        description="logarithmic-Laplacian spectrum and Fucik curve at desk scale")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("constants", help="print c_N, rho_N, d_N")
    p.add_argument("--dim", type=int, default=1)
    p.set_defaults(func=_cmd_constants)

    p = subs.add_parser("assemble", help="export form and mass matrices")
    _add_common(p)
    p.set_defaults(func=_cmd_assemble)

    p = subs.add_parser("eig", help="Dirichlet spectrum table")
    _add_common(p)
    p.add_argument("--dump-vectors", action="store_true")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_eig)

    p = subs.add_parser("curve", help="trace the first nontrivial curve")
    _add_common(p)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--mesh-n", type=int)
    p.add_argument("--path-m", type=int)
    p.add_argument("--tol-grad", type=float)
    p.add_argument("--tol-residual", type=float)
    p.add_argument("--strategy", choices=("continuation", "string"))
    p.add_argument("--dump-eigenfunctions", action="store_true")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_curve)

    p = subs.add_parser("verify", help="membership check for a pair (alpha, beta)")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--seed-file")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_verify)

    p = subs.add_parser("fracexp", help="first-order expansion errors")
    _add_common(p)
    p.add_argument("--s-list", help="comma-separated descending orders")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_fracexp)

    p = subs.add_parser("nonres", help="nonresonance mountain-pass solve")
    _add_common(p)
    p.set_defaults(func=_cmd_nonres)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run(command: str, config: RunConfig | str = "", out: str | None = None,
        extra_args=()) -> int:
    """Programmatic entry: run one subcommand against a configuration.

    `config` is a RunConfig or raw configuration text; artifacts land in
    `out` (or the configured output directory).  Returns the exit code,
    0 iff every recorded status converged.
    """
    import tempfile

    argv = [command]
    text = emit_config(config) if isinstance(config, RunConfig) else config
    tmp = None
    if text:
        tmp = tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False)
        tmp.write(text)
        tmp.close()
        argv += ["--config", tmp.name]
    if out is not None:
        argv += ["--out", out]
    argv += list(extra_args)
    try:
        return main(argv)
    finally:
        if tmp is not None:
            os.unlink(tmp.name)


if __name__ == "__main__":
    sys.exit(main())

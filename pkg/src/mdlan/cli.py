"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input error, 3 a solve stopped at
max_iter without converging (its artifacts are still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import RpcaConfig, rpca_ialm
from .bench import (
    CURVE_FIELDS,
    GRID_FIELDS,
    METHODS,
    TRIAL_FIELDS,
    default_jobs,
    f_measure,
    gen_synthetic_faces,
    gen_synthetic_video,
    make_rng,
    add_salt_pepper,
    phase_grid,
    run_trials,
    summarize,
    sweep_p,
    write_rows,
)
from .codelength import CodelengthModel
from .core import load_matrix, save_mdm1
from .imaging import (
    ImageStack,
    decompose_stack,
    foreground_mask,
    load_stack,
    save_components,
    save_stack,
    stack_from_matrix,
)
from .solver import RESCALE_MODES, SolverConfig, decompose, write_trace

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_MAXITER = 0, 1, 2, 3

log = logging.getLogger("mdlan")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- flag parsing helpers ------------------------------------------------------

def _shape(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("image dimensions must be positive")
    return h, w


def _list_of(kind):
    def parse(text: str):
        try:
            vals = [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
        if not vals:
            raise argparse.ArgumentTypeError("list is empty")
        return vals
    return parse


def _methods(text: str):
    vals = _list_of(str)(text)
    bad = [v for v in vals if v not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS}")
    return vals


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=float, default=1e-7)
    g.add_argument("--max-iter", type=int, default=500)
    g.add_argument("--mu1", type=float, default=None)
    g.add_argument("--rho", type=float, default=None,
                   help="continuation factor (default 1.1 for mdlan, 1.5 for rpca)")
    g.add_argument("--theta1", type=float, default=1.0)
    g.add_argument("--r-hat-cap", type=int, default=None)
    g.add_argument("--model", choices=["lg", "laplace"], default="lg")
    g.add_argument("--sigma-floor", type=float, default=0.5)
    g.add_argument("--rescale", choices=RESCALE_MODES, default="pilot")
    g.add_argument("--outlier-scale", type=float, default=None)
    g.add_argument("--working-range", type=float, default=80.0)
    g.add_argument("--theta-all-entries", action="store_true",
                   help="estimate theta over all entries instead of the support")
    g.add_argument("--gamma", type=float, default=None, help="rpca l1 weight")


def _solver_config(args, image_shape=None) -> SolverConfig:
    kw = {} if args.rho is None else {"rho": args.rho}
    return SolverConfig(
        mu1=args.mu1, theta1=args.theta1, tol=args.tol, max_iter=args.max_iter,
        r_hat_cap=args.r_hat_cap,
        model=CodelengthModel(kind=args.model, sigma_floor=args.sigma_floor),
        image_shape=image_shape, theta_support_only=not args.theta_all_entries,
        rescale=args.rescale, outlier_scale=args.outlier_scale,
        working_range=args.working_range, **kw)


def _rpca_config(args) -> RpcaConfig:
    kw = {} if args.rho is None else {"rho": args.rho}
    return RpcaConfig(gamma=args.gamma, tol=args.tol, max_iter=args.max_iter, mu1=args.mu1, **kw)


def _configs(args, image_shape=None):
    try:
        return _solver_config(args, image_shape), _rpca_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _jobs(args) -> int:
    return default_jobs() if args.jobs is None else max(1, args.jobs)


# -- outputs ---------------------------------------------------------------------

def _out_dir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _prepare_file(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _result_summary(res) -> dict:
    return {"rank_est": res.rank_est, "nnz_est": res.nnz_est, "iters": res.iters,
            "status": res.status,
            "feasibility": res.history[-1].feasibility if res.history else 0.0}


def _solve(Y, method, scfg, rcfg):
    return decompose(Y, scfg) if method == "mdlan" else rpca_ialm(Y, rcfg)


# -- subcommands -----------------------------------------------------------------

def cmd_decompose(args) -> int:
    try:
        Y = load_matrix(args.input)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from None
    if not np.all(np.isfinite(Y)):
        raise InputError(f"{args.input}: matrix has non-finite entries")
    if args.image_shape and args.image_shape[0] * args.image_shape[1] != Y.shape[0]:
        h, w = args.image_shape
        raise InputError(f"image shape {h}x{w} does not match {Y.shape[0]} rows")
    scfg, rcfg = _configs(args, args.image_shape)
    res = _solve(Y, args.method, scfg, rcfg)
    out = _out_dir(args.out)
    if args.image_shape:
        save_components(res, args.image_shape, out)
    else:
        save_mdm1(out / "X.mdm1", res.X)
        save_mdm1(out / "E.mdm1", res.E)
    if args.trace:
        write_trace(_prepare_file(args.trace), res.history)
    _write_json(out / "summary.json", {"method": args.method, **_result_summary(res)})
    log.info("%s: rank %d, nnz %d, %s after %d iterations",
             args.method, res.rank_est, res.nnz_est, res.status, res.iters)
    return EXIT_OK if res.converged else EXIT_MAXITER


def cmd_synth(args) -> int:
    scfg, rcfg = _configs(args)
    try:
        records = run_trials(args.m, args.n, args.rank, args.p, args.trials, args.method,
                             args.seed, _jobs(args), scfg, rcfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_rows(_prepare_file(args.out), TRIAL_FIELDS, [r.row() for r in records])
    s = summarize(args.method, args.n, args.p, records)
    log.info("%s p=%g: lr NRMSE %.3g, sp NRMSE %.3g, success %.2f", args.method, args.p,
             s["mean_lr_nrmse"], s["mean_sp_nrmse"], s["success_ratio"])
    return EXIT_OK


def cmd_phase_grid(args) -> int:
    scfg, rcfg = _configs(args)
    try:
        rows = phase_grid(args.m, args.rank, args.n_list, args.p_list, args.trials,
                          args.methods, args.seed, _jobs(args), scfg, rcfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_rows(_prepare_file(args.out), GRID_FIELDS, rows)
    return EXIT_OK


def cmd_sweep_p(args) -> int:
    scfg, rcfg = _configs(args)
    try:
        rows = sweep_p(args.m, args.n, args.rank, args.p_list, args.trials, args.methods,
                       args.seed, _jobs(args), scfg, rcfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_rows(_prepare_file(args.out), CURVE_FIELDS, rows)
    return EXIT_OK


def _load_frames(directory, pattern=None) -> ImageStack:
    try:
        return load_stack(directory, pattern)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _decompose_frames(stack: ImageStack, args, out: Path):
    scfg, rcfg = _configs(args, (stack.h, stack.w))
    if args.method == "mdlan":
        results = decompose_stack(stack, scfg, jobs=_jobs(args))
    else:
        results = {c: rpca_ialm(Y, rcfg) for c, Y in enumerate(stack.data)}
    for c, res in results.items():
        save_components(res, (stack.h, stack.w), out if stack.channels == 1 else out / f"channel_{c}")
    return results


def cmd_background(args) -> int:
    stack = _load_frames(args.frames, args.pattern)
    out = _out_dir(args.out)
    results = _decompose_frames(stack, args, out)
    mask = np.zeros_like(stack.data[0], dtype=bool)
    for res in results.values():
        mask |= foreground_mask(res.E, args.kappa)
    save_stack(stack_from_matrix(mask * 255.0, stack.h, stack.w), out, prefix="mask")
    summary = {"method": args.method, "frames": stack.frames,
               "channels": {str(c): _result_summary(r) for c, r in results.items()}}
    if args.truth:
        truth = _load_frames(args.truth)
        if (truth.h, truth.w, truth.frames) != (stack.h, stack.w, stack.frames):
            raise InputError("truth masks do not match the frame stack")
        t = truth.data[0] > 127
        try:
            summary["f_measure"] = f_measure(mask, t)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        log.info("F-measure %.4f", summary["f_measure"])
    _write_json(out / "summary.json", summary)
    return EXIT_OK if all(r.converged for r in results.values()) else EXIT_MAXITER


def cmd_faces(args) -> int:
    stack = _load_frames(args.frames, args.pattern)
    out = _out_dir(args.out)
    if args.salt_pepper:
        if not 0 <= args.salt_pepper <= 1:
            raise UsageError("--salt-pepper must lie in [0, 1]")
        noisy = [add_salt_pepper(Y, args.salt_pepper, make_rng(args.seed, c))
                 for c, Y in enumerate(stack.data)]
        stack = ImageStack(stack.h, stack.w, stack.channels, noisy, stack.names)
        save_stack(stack, out / "noisy", prefix="noisy")
    results = _decompose_frames(stack, args, out)
    _write_json(out / "summary.json", {
        "method": args.method, "frames": stack.frames, "salt_pepper": args.salt_pepper,
        "channels": {str(c): _result_summary(r) for c, r in results.items()}})
    return EXIT_OK if all(r.converged for r in results.values()) else EXIT_MAXITER


def cmd_video_gen(args) -> int:
    try:
        Y, truth = gen_synthetic_video(args.h, args.w, args.frames, args.square,
                                       args.drift, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    save_stack(stack_from_matrix(Y, args.h, args.w), out, prefix="frame")
    save_stack(stack_from_matrix(truth * 255.0, args.h, args.w), out / "truth", prefix="mask")
    return EXIT_OK


def cmd_faces_gen(args) -> int:
    if not 0 <= args.shadow_frac <= 1:
        raise UsageError("--shadow-frac must lie in [0, 1]")
    Y, base, _ = gen_synthetic_faces(args.h, args.w, args.frames, args.shadow_frac, args.seed)
    out = _out_dir(args.out)
    save_stack(stack_from_matrix(Y, args.h, args.w), out, prefix="face")
    save_stack(stack_from_matrix(base, args.h, args.w), out / "clean", prefix="face")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdlan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, func, help_text, solver=True, jobs=True):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        if jobs:
            p.add_argument("--jobs", type=int, default=None,
                           help="worker processes (default: all cores)")
        if solver:
            _add_solver_flags(p)
        return p

    p = add("decompose", cmd_decompose, "split one matrix into X + E", jobs=False)
    p.add_argument("--input", required=True, help="MDM1 or CSV matrix")
    p.add_argument("--method", choices=METHODS, default="mdlan")
    p.add_argument("--image-shape", type=_shape, default=None, metavar="HxW")
    p.add_argument("--trace", default=None, help="per-iteration CSV")
    p.add_argument("--out", required=True)

    p = add("synth", cmd_synth, "seeded trials at one (m, n, r, p)")
    p.add_argument("--m", type=int, default=108)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--method", choices=METHODS, default="mdlan")
    p.add_argument("--out", default="trials.csv")

    p = add("phase-grid", cmd_phase_grid, "success ratio over an (n, p) grid")
    p.add_argument("--m", type=int, default=900)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--n-list", type=_list_of(int), default=[10, 20, 30, 40, 50])
    p.add_argument("--p-list", type=_list_of(float), default=[0.01, 0.11, 0.21, 0.31, 0.41])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--methods", type=_methods, default=list(METHODS))
    p.add_argument("--out", default="grid.csv")

    p = add("sweep-p", cmd_sweep_p, "error, rank and sparsity curves against p")
    p.add_argument("--m", type=int, default=108)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--p-list", type=_list_of(float),
                   default=[0.05, 0.15, 0.25, 0.35, 0.45, 0.55])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--methods", type=_methods, default=list(METHODS))
    p.add_argument("--out", default="curves.csv")

    for name, func, text in (("background", cmd_background, "background/foreground split"),
                             ("faces", cmd_faces, "shadow and noise removal on a face stack")):
        p = add(name, func, text)
        p.add_argument("--frames", required=True, help="directory of PGM/PPM frames")
        p.add_argument("--pattern", default=None, help="glob for frame files")
        p.add_argument("--method", choices=METHODS, default="mdlan")
        p.add_argument("--out", required=True)
        if name == "background":
            p.add_argument("--truth", default=None, help="directory of truth masks")
            p.add_argument("--kappa", type=float, default=0.0)
        else:
            p.add_argument("--salt-pepper", type=float, default=0.0, metavar="DENSITY")

    p = add("video-gen", cmd_video_gen, "synthetic video with truth masks",
            solver=False, jobs=False)
    p.add_argument("--h", type=int, default=48)
    p.add_argument("--w", type=int, default=64)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--square", type=int, default=8)
    p.add_argument("--drift", type=float, default=0.0, help="illumination drift amplitude")
    p.add_argument("--out", required=True)

    p = add("faces-gen", cmd_faces_gen, "rank-1 face stack with planted shadows",
            solver=False, jobs=False)
    p.add_argument("--h", type=int, default=48)
    p.add_argument("--w", type=int, default=42)
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--shadow-frac", type=float, default=0.3)
    p.add_argument("--out", required=True)
    return parser


def _manifest_dir(args) -> Path:
    out = Path(args.out)
    return out.parent if out.suffix.lower() == ".csv" else out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"mdlan {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"mdlan {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "subcommand")}
    manifest = {
        "subcommand": args.subcommand,
        "flags": flags,
        "seed": args.seed,
        "started_at": started.isoformat(),
        "wall_seconds": time.perf_counter() - t0,
        "version": __version__,
    }
    _write_json(_out_dir(_manifest_dir(args)) / "run.json", manifest)
    return code

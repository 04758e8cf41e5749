"""Command-line pipeline: gram | synthesize | simulate | verify.

Every subcommand takes --config (TOML), repeated --set section.field=value
overrides, --out, --threads (or LAGCTRL_THREADS), and --dry-run.  Reports
are JSON with all floats printed to 17 significant digits; the only
run-dependent value (a timestamp) lives in the "header" object so payloads
are byte-identical across runs of the same configuration.

Exit codes: 0 success, 1 configuration or I/O error (and failed checks for
``verify``), 2 degenerate Gram matrix, 3 shooting divergence, 4 forcing out
of the small-data regime.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .adjoint import AdjointField, xi_batch
from .config import ConfigError, load_config
from .control import AmplitudeTooLarge, Diverged, ShootingOperator, synthesize
from .flowmap import FlowTrace, advect_many, trace_to_csv
from .gram import DegenerateGram, gram_matrix
from .pde import CflViolation, Grid, NonFiniteField, VacuumApproach
from .verify import identity_suite

log = logging.getLogger("lagctrl")

_NEAR_DEGENERATE_RTOL = 1e-3


def _json_value(obj, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad_in}"{k}": {_json_value(obj[k], indent, level + 1)}' for k in sorted(obj)
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = ",\n".join(f"{pad_in}{_json_value(v, indent, level + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return '"nan"'
        if np.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj)} to JSON")


def to_json(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _json_value(obj, indent, 0) + "\n"


def write_report(path: Path, payload: dict) -> None:
    doc = {
        "header": {
            "tool": "lagctrl",
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        },
        "payload": payload,
    }
    path.write_text(to_json(doc))


def _add_common(sub):
    sub.add_argument("--config", type=str, default=None, help="TOML configuration file")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.FIELD=VALUE",
        help="override one configuration field (repeatable)",
    )
    sub.add_argument("--out", type=str, default=None, help="output directory override")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker cap (default: LAGCTRL_THREADS or 1)",
    )
    sub.add_argument(
        "--dry-run",
        action="store_true",
        help="validate configuration, print resolved values, exit",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagctrl",
        description="Remote-forcing synthesis for particle paths of a 1D compressible flow",
    )
    parser.add_argument("--version", action="version", version=f"lagctrl {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gram", help="Gram matrix of the windowed control fields")
    _add_common(p)

    p = subs.add_parser("synthesize", help="Newton shooting for the amplitudes")
    _add_common(p)

    p = subs.add_parser("simulate", help="one nonlinear run + particle traces")
    _add_common(p)
    p.add_argument(
        "--epsilon",
        type=str,
        default=None,
        help="comma-separated amplitudes (default: zeros)",
    )

    p = subs.add_parser("verify", help="numerical verification battery")
    _add_common(p)
    p.add_argument(
        "--only",
        type=str,
        default=None,
        help="comma-separated subset: trig,chebyshev,gram,duality,linearization",
    )
    return parser


def _prepare(args):
    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f'output.directory="{args.out}"')
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("LAGCTRL_THREADS", "1"))
    overrides.append(f"numerics.threads={threads}")
    cfg = load_config(args.config, overrides)
    outdir = Path(cfg.output.directory)
    if not args.dry_run:
        outdir.mkdir(parents=True, exist_ok=True)
    return cfg, outdir


def _grid(cfg) -> Grid:
    return Grid.from_cfl(
        cfg.numerics.M,
        cfg.problem.T,
        cfg.gas.c,
        cfl=cfg.numerics.cfl,
        u_headroom=cfg.numerics.u_headroom,
    )


def _xi_samples_csv(cfg, path: Path) -> None:
    lo, hi = cfg.problem.omega
    x = np.linspace(lo, hi, 65)
    t = np.linspace(0.0, cfg.problem.T, 33)
    mats = [
        xi_batch(
            AdjointField(a, cfg.gas.c, cfg.problem.T, nmax=cfg.numerics.nmax, accel=cfg.numerics.accel),
            t,
            x,
        )
        for a in cfg.problem.alphas
    ]
    with open(path, "w") as fh:
        fh.write("t,x," + ",".join(f"xi_{i + 1}" for i in range(len(mats))) + "\n")
        for k, tk in enumerate(t):
            for l, xl in enumerate(x):
                vals = ",".join(f"{m[k, l]:.17g}" for m in mats)
                fh.write(f"{tk:.17g},{xl:.17g},{vals}\n")


def cmd_gram(args) -> int:
    cfg, outdir = _prepare(args)
    if args.dry_run:
        sys.stdout.write(to_json(cfg.resolved()))
        return 0
    try:
        report = gram_matrix(
            cfg.problem,
            cfg.gas,
            nmax=cfg.numerics.nmax,
            panels=cfg.numerics.quad_panels,
            nodes=cfg.numerics.quad_nodes,
            accel=cfg.numerics.accel,
            degeneracy_rtol=cfg.numerics.degeneracy_rtol,
        )
    except DegenerateGram as exc:
        log.error("degenerate Gram matrix: %s", exc)
        if exc.report is not None:
            write_report(outdir / "gram.json", {"config": cfg.resolved(), "gram": exc.report.to_dict(), "degenerate": True})
        return 2
    if report.min_eigenvalue <= _NEAR_DEGENERATE_RTOL * report.max_eigenvalue:
        log.warning(
            "near-degenerate Gram matrix: eigenvalue ratio %.3e",
            report.min_eigenvalue / report.max_eigenvalue,
        )
    write_report(outdir / "gram.json", {"config": cfg.resolved(), "gram": report.to_dict(), "degenerate": False})
    _xi_samples_csv(cfg, outdir / "xi_samples.csv")
    log.info("wrote %s", outdir / "gram.json")
    return 0


def _write_final_snapshot(path: Path, grid: Grid, rho, u) -> None:
    with open(path, "w") as fh:
        fh.write("field,x,value\n")
        for xc, r in zip(grid.x_centers, rho):
            fh.write(f"rho,{xc:.17g},{r:.17g}\n")
        for xn, uu in zip(grid.x_nodes, u):
            fh.write(f"u,{xn:.17g},{uu:.17g}\n")


def cmd_synthesize(args) -> int:
    cfg, outdir = _prepare(args)
    if args.dry_run:
        sys.stdout.write(to_json(cfg.resolved()))
        return 0
    grid = _grid(cfg)
    num = cfg.numerics
    op = ShootingOperator(
        cfg.problem, cfg.gas, grid, nmax=num.nmax, accel=num.accel,
        substeps=num.substeps, rho_floor=num.rho_floor,
    )
    try:
        report = synthesize(
            cfg.problem,
            cfg.gas,
            grid,
            nmax=num.nmax,
            accel=num.accel,
            quad_panels=num.quad_panels,
            quad_nodes=num.quad_nodes,
            tol_pos=num.tol_pos,
            max_iter=num.max_iter,
            degeneracy_rtol=num.degeneracy_rtol,
            threads=num.threads,
            operator=op,
        )
    except DegenerateGram as exc:
        log.error("degenerate Gram matrix: %s", exc)
        return 2
    except Diverged as exc:
        log.error("shooting diverged: %s", exc)
        return 3
    except AmplitudeTooLarge as exc:
        log.error("forcing out of regime: %s", exc)
        return 4

    write_report(
        outdir / "synthesis.json",
        {"config": cfg.resolved(), "synthesis": report.to_dict()},
    )
    history = op.last_history
    if history is not None:
        positions = advect_many(history, np.asarray(cfg.problem.alphas))
        for i, a in enumerate(cfg.problem.alphas):
            trace = FlowTrace(x0=a, times=history.times.copy(), positions=positions[:, i])
            trace_to_csv(trace, outdir / f"trace_alpha{i + 1}.csv")
        _write_final_snapshot(
            outdir / "final_state.csv", grid, op.last_diag.rho_final, history.values[-1]
        )
    log.info("wrote %s", outdir / "synthesis.json")
    return 0


def cmd_simulate(args) -> int:
    cfg, outdir = _prepare(args)
    if args.dry_run:
        sys.stdout.write(to_json(cfg.resolved()))
        return 0
    d = cfg.problem.d
    if args.epsilon is None:
        epsilon = np.zeros(d)
    else:
        try:
            epsilon = np.asarray([float(v) for v in args.epsilon.split(",")])
        except ValueError:
            log.error("cannot parse --epsilon %r", args.epsilon)
            return 1
        if epsilon.size != d:
            log.error("--epsilon needs %d values, got %d", d, epsilon.size)
            return 1
    grid = _grid(cfg)
    num = cfg.numerics
    op = ShootingOperator(
        cfg.problem, cfg.gas, grid, nmax=num.nmax, accel=num.accel,
        substeps=num.substeps, rho_floor=num.rho_floor,
    )
    try:
        terminal = op.theta(epsilon)
    except AmplitudeTooLarge as exc:
        log.error("forcing out of regime: %s", exc)
        return 4
    history = op.last_history
    try:
        if "lcns" in cfg.output.formats:
            history.save(outdir / "history.lcns")
        if "csv" in cfg.output.formats:
            history.to_csv(outdir / "history.csv", stride_t=max(1, history.steps // 200))
        positions = advect_many(history, np.asarray(cfg.problem.alphas))
        for i, a in enumerate(cfg.problem.alphas):
            trace = FlowTrace(x0=a, times=history.times.copy(), positions=positions[:, i])
            trace_to_csv(trace, outdir / f"trace_alpha{i + 1}.csv")
        _write_final_snapshot(
            outdir / "final_state.csv", grid, op.last_diag.rho_final, history.values[-1]
        )
        write_report(
            outdir / "simulate.json",
            {
                "config": cfg.resolved(),
                "epsilon": [float(e) for e in epsilon],
                "terminal_positions": [float(p) for p in terminal],
                "mass_drift": op.last_diag.mass_drift,
                "min_rho": op.last_diag.min_rho,
            },
        )
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return 1
    log.info("wrote %s", outdir / "simulate.json")
    return 0


def cmd_verify(args) -> int:
    cfg, outdir = _prepare(args)
    if args.dry_run:
        sys.stdout.write(to_json(cfg.resolved()))
        return 0
    only = None if args.only is None else args.only.split(",")
    grid = _grid(cfg)
    num = cfg.numerics
    report = identity_suite(
        cfg.problem,
        cfg.gas,
        grid,
        nmax=num.nmax,
        accel=num.accel,
        quad_panels=num.quad_panels,
        quad_nodes=num.quad_nodes,
        trig_tuples=num.trig_tuples,
        trig_dmax=num.trig_dmax,
        seed=num.seed,
        threads=num.threads,
        only=only,
    )
    sys.stdout.write(report.table() + "\n")
    write_report(outdir / "verify.json", {"config": cfg.resolved(), "verify": report.to_dict()})
    return 0 if report.all_passed else 1


_COMMANDS = {
    "gram": cmd_gram,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 1
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

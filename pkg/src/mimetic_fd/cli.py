"""Command-line front end.

Subcommands::

    mimetic-fd run --config PATH [--out PATH]
    mimetic-fd conformance [--seed U64] [--sizes LIST] [--gammas LIST] [--out PATH]
    mimetic-fd assemble NAME N [--length L] [--gamma G] [--seed U64] [--flux LIST] [--out PATH]
    mimetic-fd convergence --config PATH --dt LIST [--out PATH]

Exit status: 0 success, 1 configuration or usage error, 2 runtime failure.
Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

from . import operators as op
from .audit import (
    ConservationRow,
    IntegrationFailure,
    conservation_run,
    energy_convergence,
    run_conformance,
)
from .config import ConfigError, load_config, initial_state
from .grid import CellField, FaceField, build_grid
from .laws import StateLaw
from .models import smooth_random_field

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

OPERATORS = ("grad", "div", "lapl", "interp", "r_grad", "div_r", "advec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _floats(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"non-finite value in {text!r}")
    return vals


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} outside [0, 2^64)")
    return value


def _write(path, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ConservationRow.FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in ConservationRow.FIELDS])
    return buf.getvalue()


def _drift(values) -> float:
    values = np.asarray(values)
    ref = abs(values[0])
    dev = float(np.max(np.abs(values - values[0])))
    return dev / ref if ref > 0 else dev


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.out
    state = initial_state(cfg)
    status = EXIT_OK
    try:
        rows = conservation_run(state, cfg.integrator, cfg.steps, cfg.stride)
    except IntegrationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        rows, status = exc.rows, EXIT_RUNTIME
    _write(out, rows_to_csv(rows))
    print(
        f"{cfg.model.kind} {cfg.integrator.scheme}: {rows[-1].step} steps, "
        f"relative drift E_total={_drift([r.E_total for r in rows]):.3e} "
        f"mass={_drift([r.mass for r in rows]):.3e} "
        f"momentum={_drift([r.momentum for r in rows]):.3e}",
        file=sys.stderr if out in (None, "-") else sys.stdout,
    )
    return status


def cmd_conformance(args) -> int:
    sizes = _ints(args.sizes) if args.sizes is not None else (4, 8, 16)
    gammas = _floats(args.gammas) if args.gammas is not None else (1.4, 2.0)
    if any(n < 3 or 2 * n > op.MAX_DENSE_UNKNOWNS for n in sizes):
        raise UsageError(f"grid sizes must lie in [3, {op.MAX_DENSE_UNKNOWNS // 2}]")
    if any(not g > 0 for g in gammas):
        raise UsageError("power-law exponents must be positive")
    broken = [b for b in (args.break_ or "").split(",") if b]
    report = run_conformance(sizes, gammas, seed=args.seed, broken=broken)
    sys.stdout.write(report.to_text())
    if args.out:
        _write(args.out, report.to_csv())
    return EXIT_OK if report.passed else EXIT_RUNTIME


def _matrix_csv(A: np.ndarray) -> str:
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in A)


def cmd_assemble(args) -> int:
    name, N = args.operator, args.n
    if name not in OPERATORS:
        raise UsageError(f"unknown operator {name!r}; expected one of {OPERATORS}")
    if N < 3:
        raise UsageError("N must be at least 3")
    if N > op.MAX_DENSE_UNKNOWNS:
        raise UsageError(f"N={N} exceeds the dense limit {op.MAX_DENSE_UNKNOWNS}")
    try:
        grid = build_grid(1, N, args.length if args.length is not None else float(N))
        law = StateLaw.power(args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = np.random.default_rng(args.seed)
    p = CellField(grid, law.pressure(1.0 + smooth_random_field(grid.cell_centers(), grid.length, rng, 3, 0.4)))
    r = op.face_density(p, law, "euler")
    if args.flux is not None:
        flux = _floats(args.flux)
        if len(flux) != N:
            raise UsageError(f"--flux needs {N} values, got {len(flux)}")
        m = FaceField(grid, flux)
    else:
        m = FaceField(grid, rng.uniform(-1.0, 1.0, N))

    build = {
        "grad": (op.grad, "cells"),
        "div": (op.div, "faces"),
        "lapl": (op.lapl, "cells"),
        "interp": (op.interp_c2f, "cells"),
        "r_grad": (lambda s: op.r_grad(s, r), "cells"),
        "div_r": (lambda v: op.div_r(v, r), "faces"),
        "advec": (lambda w: op.advec(m, w), "faces"),
    }
    fn, source = build[name]
    A = op.assemble_dense(fn, grid, source)
    star = A.adjoint()

    pair = {"grad": ("div", -1.0, "GRAD* = -DIV"), "div": ("grad", -1.0, "DIV* = -GRAD"),
            "lapl": ("lapl", 1.0, "LAPL* = LAPL"), "r_grad": ("div_r", -1.0, "rGRAD* = -DIVr"),
            "div_r": ("r_grad", -1.0, "DIVr* = -rGRAD")}
    if name in pair:
        other, sign, label = pair[name]
        B = op.assemble_dense(build[other][0], grid, build[other][1])
        summary = f"# {label} residual={op.adjoint_residual(A, B, sign):.3e}"
    elif name == "advec":
        target = np.diag(op.interp_c2f(op.div(m)).values)
        res = float(np.max(np.abs(A.matrix + star.matrix - target)))
        summary = f"# ADVEC + ADVEC* = diag(Interp DIV m) residual={res:.3e}"
    else:
        summary = "# no paired identity for interp"

    if args.out:
        _write(args.out, _matrix_csv(A.matrix))
        root, ext = os.path.splitext(args.out)
        _write(f"{root}.adjoint{ext or '.csv'}", _matrix_csv(star.matrix))
        print(summary)
    else:
        sys.stdout.write(f"# {name} N={N} h={grid.h:.17g} ({A.out_space} x {A.in_space})\n")
        sys.stdout.write(_matrix_csv(A.matrix))
        sys.stdout.write("# weighted adjoint\n")
        sys.stdout.write(_matrix_csv(star.matrix))
        print(summary)
    return EXIT_OK


def cmd_convergence(args) -> int:
    dts = _floats(args.dt)
    if len(dts) < 3:
        raise UsageError("--dt needs at least three values")
    cfg = load_config(args.config)
    state = initial_state(cfg)
    try:
        rows, fitted = energy_convergence(state, cfg.integrator, dts, cfg.final_time)
        status = EXIT_OK
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    except IntegrationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        rows, fitted, status = exc.rows, math.nan, EXIT_RUNTIME
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dt", "steps", "energy_error", "order"])
    for r in rows:
        order = "saturated" if r.saturated else ("" if math.isnan(r.order) else _fmt(r.order))
        w.writerow([_fmt(r.dt), r.steps, _fmt(r.energy_error), order])
    _write(args.out, buf.getvalue())
    if status == EXIT_OK:
        text = "saturated" if math.isnan(fitted) else f"{fitted:.6f}"
        print(f"fitted order: {text}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mimetic-fd", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate a configured model and write its conservation series")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path (default: config 'out', else stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("conformance", help="check every operator and conservation identity")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--sizes", help="comma-separated grid sizes (default 4,8,16)")
    p.add_argument("--gammas", help="comma-separated power-law exponents (default 1.4,2)")
    p.add_argument("--out", help="also write the report as CSV")
    p.add_argument("--break", dest="break_", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_conformance)

    p = sub.add_parser("assemble", help="dump the dense matrix of an operator and its weighted adjoint")
    p.add_argument("operator", help=f"one of {', '.join(OPERATORS)}")
    p.add_argument("n", type=int)
    p.add_argument("--length", type=float, help="domain length (default N, i.e. h = 1)")
    p.add_argument("--gamma", type=float, default=2.0, help="power law for face densities")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--flux", help="comma-separated face mass flux for advec")
    p.add_argument("--out", help="matrix CSV path; the adjoint goes to <stem>.adjoint.csv")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("convergence", help="terminal energy error versus time step")
    p.add_argument("--config", required=True)
    p.add_argument("--dt", required=True, help="comma-separated geometric sequence of time steps")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

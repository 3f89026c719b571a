"""Batch command-line entry point.

Subcommands: run, conv-time, conv-space, taylor-green, truncation.
Exit codes: 0 on success (a blown-up run still exits 0 and reports NAN),
2 on configuration errors, 3 when an implicit solve fails to converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

from . import experiments
from .fieldio import read_nsf1, write_nsf1
from .integrators import (
    NonConvergence,
    RunConfig,
    SchemeKind,
    SolverConfig,
    StepDiagnostics,
    local_truncation_probe,
    run,
)
from .operators import leray_project
from .spectral import (
    GridSpec,
    SpectralField,
    forward,
    inverse,
    l2_norm,
    strip_nyquist,
)


def write_diagnostics(diags: list[StepDiagnostics], path: str | os.PathLike) -> None:
    """Serialize per-step diagnostics as a JSON array (non-finite floats
    become null)."""
    def num(x: float):
        return x if math.isfinite(x) else None
    doc = [{"n": d.step, "energy": num(d.energy),
            "divergence_inf": num(d.divergence_inf),
            "solver_iterations": d.solver_iterations,
            "solver_residual": num(d.solver_residual),
            "finite": d.finite} for d in diags]
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _parse_steps(text: str) -> list[int]:
    try:
        values = [int(s) for s in text.split(",")]
    except ValueError:
        raise ValueError(f"--steps must be an integer or comma list, got {text!r}")
    if any(v < 0 for v in values):
        raise ValueError(f"--steps values must be nonnegative, got {text!r}")
    return values


def _parse_grids(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise ValueError(f"--grid must be an integer or comma list, got {text!r}")


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    try:
        return SolverConfig(rel_tol=args.tol, max_iter=args.max_iter,
                            restart=30, method=args.solver)
    except ValueError as e:
        raise ValueError(f"--tol/--max-iter/--solver: {e}")


def _scheme(args: argparse.Namespace) -> SchemeKind:
    return SchemeKind(args.scheme)


def _grid(n: int) -> GridSpec:
    try:
        return GridSpec(n)
    except ValueError as e:
        raise ValueError(f"--grid: {e}")


def _check_mu(mu: float) -> float:
    if mu < 0:
        raise ValueError(f"--mu must be nonnegative, got {mu}")
    return mu


def _initial_condition(args: argparse.Namespace, g: GridSpec) -> SpectralField:
    spec = args.ic
    if spec == "paper":
        return experiments.paper_initial_condition(args.m, g)
    if spec == "taylor-green":
        return experiments.taylor_green(0.0, args.mu, g)
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        f = read_nsf1(path)
        if f.grid.n != g.n:
            raise ValueError(f"--ic: file grid n={f.grid.n} does not match --grid {g.n}")
        v = forward(f, g)
        v = SpectralField(strip_nyquist(v.u1, g), strip_nyquist(v.u2, g), g)
        return leray_project(v)
    raise ValueError(f"--ic must be paper, taylor-green or file:<path>, got {spec!r}")


def _out_path(args: argparse.Namespace, default: str) -> str:
    return args.out if args.out else default


def _emit(table: experiments.ConvergenceTable, args: argparse.Namespace,
          default_name: str) -> str:
    path = _out_path(args, f"{default_name}.{args.format}")
    experiments.emit_table(table, args.format, path)
    return path


def _print_headline(table: experiments.ConvergenceTable, path: str) -> None:
    rate = table.headline_rate
    text = "undefined" if rate is None else "NAN" if not math.isfinite(rate) \
        else f"{rate:.3f}"
    print(f"{table.scheme} mu={table.mu} n={table.n}: headline rate {text} "
          f"-> {path}")


def _dump_state(u: SpectralField, g: GridSpec, path: str) -> None:
    write_nsf1(path, inverse(u, g))


def _cmd_run(args: argparse.Namespace) -> int:
    steps = _parse_steps(args.steps)
    if len(steps) != 1:
        raise ValueError("--steps: run takes a single step count")
    n_steps = steps[0]
    g = _grid(args.grid)
    mu = _check_mu(args.mu)
    u0 = _initial_condition(args, g)
    cfg = RunConfig(mu=mu, schedule=[args.tmax / n_steps] * n_steps if n_steps else [],
                    grid=g, scheme=_scheme(args), solver=_solver_config(args))
    u, diags = run(cfg, u0)
    out = _out_path(args, "run.nsf1")
    finite = all(d.finite for d in diags)
    if finite:
        _dump_state(u, g, out)
    diag_path = os.path.splitext(out)[0] + ".diag.json"
    write_diagnostics(diags, diag_path)
    if finite:
        print(f"final energy {l2_norm(u):.12e} after {len(diags)} steps -> {out}")
    else:
        print(f"result: NAN (run blew up at step {diags[-1].step}) -> {diag_path}")
    return 0


def _dump_dir(args: argparse.Namespace) -> Optional[str]:
    if not args.dump_fields:
        return None
    if args.out:
        return os.path.dirname(args.out) or "."
    return "."


def _cmd_conv_time(args: argparse.Namespace) -> int:
    table = experiments.time_self_convergence(
        _scheme(args), _check_mu(args.mu), _grid(args.grid), args.tmax,
        _parse_steps(args.steps), m=args.m, solver=_solver_config(args),
        dump_dir=_dump_dir(args))
    path = _emit(table, args, "conv_time")
    _print_headline(table, path)
    return 0


def _cmd_conv_space(args: argparse.Namespace) -> int:
    steps = _parse_steps(args.steps)
    if len(steps) != 1:
        raise ValueError("--steps: conv-space takes a single step count")
    table = experiments.spatial_resolution_study(
        _scheme(args), _check_mu(args.mu), args.tmax, steps[0],
        _parse_grids(args.grid), m=args.m, solver=_solver_config(args),
        dump_dir=_dump_dir(args))
    path = _emit(table, args, "conv_space")
    _print_headline(table, path)
    return 0


def _cmd_taylor_green(args: argparse.Namespace) -> int:
    steps = _parse_steps(args.steps)
    g = _grid(args.grid)
    mu = _check_mu(args.mu)
    solver = _solver_config(args)
    if len(steps) == 1:
        N = steps[0]
        if N < 1:
            raise ValueError("--steps must be positive for the benchmark")
        cfg = RunConfig(mu=mu, schedule=[args.tmax / N] * N, grid=g,
                        scheme=_scheme(args), solver=solver)
        u, diags = run(cfg, experiments.taylor_green(0.0, mu, g))
        if not all(d.finite for d in diags):
            print("taylor-green error: NAN (run blew up)")
            return 0
        err = l2_norm(u - experiments.taylor_green(args.tmax, mu, g))
        print(f"taylor-green error N={N}: {err:.6e}")
        if args.out:
            table = experiments.ConvergenceTable(
                [experiments.TableRow(N, err)], args.scheme, mu, g.n, args.tmax)
            experiments.emit_table(table, args.format, args.out)
        return 0
    table = experiments.taylor_green_convergence(
        _scheme(args), mu, g, args.tmax, steps, seed=args.seed, solver=solver)
    path = _emit(table, args, "taylor_green")
    _print_headline(table, path)
    return 0


def _cmd_truncation(args: argparse.Namespace) -> int:
    steps = _parse_steps(args.steps)
    if any(N < 1 for N in steps):
        raise ValueError("--steps must be positive step counts")
    g = _grid(args.grid)
    mu = _check_mu(args.mu)
    solver = _solver_config(args)
    u_ref = experiments.paper_initial_condition(args.m, g)
    probes = [local_truncation_probe(_scheme(args), u_ref, args.tmax / N, mu,
                                     solver=solver) for N in steps]
    rows = []
    prev = None
    for N, p in zip(steps, probes):
        rate = None if prev is None else math.log2(prev / p) if p > 0 else float("nan")
        rows.append(experiments.TableRow(N, p, rate))
        prev = p
        print(f"N={N} tau={args.tmax / N:.6e} probe={p:.6e}"
              + (f" ratio={2.0 ** rate:.3f}" if rate is not None else ""))
    if args.out:
        table = experiments.ConvergenceTable(rows, args.scheme, mu, g.n, args.tmax)
        experiments.emit_table(table, args.format, args.out)
    return 0


def _add_common(p: argparse.ArgumentParser, *, grids: bool = False) -> None:
    p.add_argument("--scheme", default="lri",
                   choices=[s.value for s in SchemeKind])
    p.add_argument("--mu", type=float, default=0.01, help="viscosity")
    if grids:
        p.add_argument("--grid", default="64",
                       help="comma list of modes per dimension")
    else:
        p.add_argument("--grid", type=int, default=64, help="modes per dimension")
    p.add_argument("--steps", default="128", help="step count N or comma list")
    p.add_argument("--tmax", type=float, default=experiments.DEFAULT_T,
                   help="final time T")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="relative residual tolerance of implicit solves")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--solver", default="krylov", choices=["krylov", "fixed-point"])
    p.add_argument("--out", default=None, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nslab",
        description="Pseudo-spectral 2D incompressible Navier-Stokes solver "
                    "laboratory on the periodic torus")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("run", help="single time-marching run; dumps the final field")
    _add_common(p)
    p.add_argument("--ic", default="paper",
                   help="initial condition: paper, taylor-green or file:<path>")
    p.add_argument("--m", type=float, default=experiments.DEFAULT_M,
                   help="smoothness exponent of the paper initial condition")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("conv-time", help="temporal self-convergence study")
    _add_common(p)
    p.add_argument("--m", type=float, default=experiments.DEFAULT_M)
    p.add_argument("--format", default="csv", choices=["csv", "markdown", "json"])
    p.add_argument("--dump-fields", action="store_true")
    p.set_defaults(func=_cmd_conv_time)

    p = sub.add_parser("conv-space", help="spatial resolution study")
    _add_common(p, grids=True)
    p.add_argument("--m", type=float, default=experiments.DEFAULT_M)
    p.add_argument("--format", default="csv", choices=["csv", "markdown", "json"])
    p.add_argument("--dump-fields", action="store_true")
    p.set_defaults(func=_cmd_conv_space)

    p = sub.add_parser("taylor-green",
                       help="exact-solution benchmark (single N) or perturbed "
                            "convergence study (comma list)")
    _add_common(p)
    p.add_argument("--format", default="csv", choices=["csv", "markdown", "json"])
    p.add_argument("--seed", type=int, default=1,
                   help="seed of the study perturbation")
    p.set_defaults(func=_cmd_taylor_green)

    p = sub.add_parser("truncation", help="one-step defect probe")
    _add_common(p)
    p.add_argument("--m", type=float, default=experiments.DEFAULT_M)
    p.add_argument("--format", default="csv", choices=["csv", "markdown", "json"])
    p.set_defaults(func=_cmd_truncation)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except NonConvergence as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()

"""Initial conditions, exact-solution oracles and convergence studies.

Temporal accuracy is estimated by self-convergence: the L2 difference of
final-time solutions computed with stepsize tau = T/N and tau/2 on the
same grid. The headline rate of a table is computed from the two finest
stepsizes. Blown-up runs contribute NAN entries instead of aborting the
study.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fieldio import write_nsf1
from .integrators import RunConfig, SchemeKind, SolverConfig, run
from .operators import leray_project
from .spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    _unpad,
    forward,
    inverse,
    l2_norm,
    strip_nyquist,
)

DEFAULT_M = 2.6
DEFAULT_T = 0.125
PERTURBATION_AMPLITUDE = 0.1
PERTURBATION_MAX_MODE = 3
REFERENCE_REFINEMENT = 64


def paper_initial_condition(m: float, g: GridSpec, *, printed_form: bool = False
                            ) -> SpectralField:
    """Stream-function initial vortex with finite Sobolev smoothness.

    u = (d psi / dy, -d psi / dx) for psi = sin^m(pi x) sin^m(pi y);
    m = 2.6 gives a field just above H^2 regularity. The samples are
    transformed, restricted to the symmetric wavenumber window and
    Leray-projected, so the discrete field is real-valued and exactly
    divergence-free.

    printed_form=True selects the variant with the exponents swapped in
    the second component (not divergence-free before projection); kept
    for comparison only.
    """
    if m <= 1:
        raise ValueError(f"exponent must exceed 1, got {m}")
    X, Y = g.sample_points()
    sx, sy = np.sin(np.pi * X), np.sin(np.pi * Y)
    cx, cy = np.cos(np.pi * X), np.cos(np.pi * Y)
    u1 = m * np.pi * sx ** m * sy ** (m - 1) * cy
    if printed_form:
        u2 = -m * np.pi * sx ** m * cx * sy ** (m - 1)
    else:
        u2 = -m * np.pi * sx ** (m - 1) * cx * sy ** m
    f = forward(PhysicalField(u1, u2, g), g)
    f = SpectralField(strip_nyquist(f.u1, g), strip_nyquist(f.u2, g), g)
    # the stream-function construction has zero mean; the slot holds only
    # quadrature roundoff
    f.u1[0, 0] = 0.0
    f.u2[0, 0] = 0.0
    return leray_project(f)


def taylor_green(t: float, mu: float, g: GridSpec) -> SpectralField:
    """Exact decaying vortex u = e^(-8 pi^2 mu t) (-cos sin, sin cos).

    Its self-advection is a pure gradient, so the exact evolution is heat
    decay; every scheme here reproduces it to solver tolerance.
    """
    X, Y = g.sample_points()
    a = math.exp(-8.0 * np.pi ** 2 * mu * t)
    u1 = -a * np.cos(2 * np.pi * X) * np.sin(2 * np.pi * Y)
    u2 = a * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y)
    return leray_project(forward(PhysicalField(u1, u2, g), g))


def low_mode_perturbation(g: GridSpec, seed: int = 1,
                          amplitude: float = PERTURBATION_AMPLITUDE,
                          max_mode: int = PERTURBATION_MAX_MODE) -> SpectralField:
    """Random divergence-free field supported on modes |k| <= max_mode,
    normalized to the requested L2 amplitude. Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    n = g.n
    c = np.zeros((2, n, n), dtype=np.complex128)
    slots = [k % n for k in range(-max_mode, max_mode + 1)]
    for comp in range(2):
        for jy in slots:
            for jx in slots:
                re, im = rng.standard_normal(2)
                c[comp, jy, jx] = re + 1j * im
    idx = (-np.arange(n)) % n
    c = 0.5 * (c + np.conj(c[:, idx][:, :, idx]))
    c[:, 0, 0] = 0.0
    f = leray_project(SpectralField(c[0], c[1], g))
    scale = amplitude / l2_norm(f)
    return scale * f


@dataclass
class TableRow:
    index: int
    error: float
    rate: Optional[float] = None


@dataclass
class ConvergenceTable:
    """Rows of (N, error, rate) with the study metadata."""

    rows: list[TableRow]
    scheme: str
    mu: float
    n: int
    T: float
    index_label: str = "N"

    @property
    def headline_rate(self) -> Optional[float]:
        """Rate from the two finest rows, or None if undefined."""
        if len(self.rows) < 2:
            return None
        return self.rows[-1].rate


def _rates(errors: Sequence[float]) -> list[Optional[float]]:
    out: list[Optional[float]] = [None]
    for prev, cur in zip(errors, errors[1:]):
        if math.isfinite(prev) and math.isfinite(cur) and prev > 0 and cur > 0:
            out.append(math.log2(prev / cur))
        else:
            out.append(float("nan"))
    return out


def _check_doubling(values: Sequence[int], label: str) -> None:
    if not values:
        raise ValueError(f"{label} list must not be empty")
    if any(v <= 0 for v in values):
        raise ValueError(f"{label} values must be positive")
    for a, b in zip(values, values[1:]):
        if b != 2 * a:
            raise ValueError(f"{label} list must be strictly doubling, got {list(values)}")


def _final_state(scheme: SchemeKind, mu: float, g: GridSpec, T: float, N: int,
                 u0: SpectralField, solver: Optional[SolverConfig]
                 ) -> Optional[SpectralField]:
    cfg = RunConfig(mu=mu, schedule=[T / N] * N, grid=g, scheme=scheme,
                    solver=solver or SolverConfig())
    u, diags = run(cfg, u0)
    if diags and not diags[-1].finite:
        return None
    return u


def _dump_finals(finals: dict[int, Optional[SpectralField]], label: str,
                 dump_dir: Optional[str]) -> None:
    if dump_dir is None:
        return
    os.makedirs(dump_dir, exist_ok=True)
    for key, u in finals.items():
        if u is not None:
            write_nsf1(os.path.join(dump_dir, f"u_{label}{key}.nsf1"),
                       inverse(u, u.grid))


def time_self_convergence(scheme: SchemeKind, mu: float, g: GridSpec, T: float,
                          N_list: Sequence[int], m: float = DEFAULT_M,
                          solver: Optional[SolverConfig] = None,
                          u0: Optional[SpectralField] = None,
                          dump_dir: Optional[str] = None) -> ConvergenceTable:
    """Self-convergence table: error(N) = ||u_T^(T/N) - u_T^(T/2N)||_L2."""
    _check_doubling(N_list, "N")
    if T <= 0:
        raise ValueError(f"final time must be positive, got {T}")
    if u0 is None:
        u0 = paper_initial_condition(m, g)
    all_N = list(N_list) + [2 * N_list[-1]]
    finals = {N: _final_state(scheme, mu, g, T, N, u0, solver) for N in all_N}
    _dump_finals(finals, "N", dump_dir)
    errors = []
    for N in N_list:
        a, b = finals[N], finals[2 * N]
        errors.append(l2_norm(a - b) if a is not None and b is not None else float("nan"))
    rates = _rates(errors)
    rows = [TableRow(N, e, r) for N, e, r in zip(N_list, errors, rates)]
    return ConvergenceTable(rows, scheme.value, mu, g.n, T)


def taylor_green_convergence(scheme: SchemeKind, mu: float, g: GridSpec, T: float,
                             N_list: Sequence[int],
                             perturbation: float = PERTURBATION_AMPLITUDE,
                             seed: int = 1,
                             ref_refinement: int = REFERENCE_REFINEMENT,
                             solver: Optional[SolverConfig] = None) -> ConvergenceTable:
    """Global-error table against a true solution.

    Unperturbed, every scheme tracks the decayed vortex to solver
    tolerance. A small projected low-mode perturbation activates the
    nonlinearity; the reference trajectory is then computed by the lri
    scheme with ref_refinement * max(N) steps.
    """
    _check_doubling(N_list, "N")
    u0 = taylor_green(0.0, mu, g)
    if perturbation:
        u0 = leray_project(u0 + low_mode_perturbation(g, seed, perturbation))
        ref = _final_state(SchemeKind.LRI, mu, g, T, ref_refinement * max(N_list),
                           u0, solver)
    else:
        ref = taylor_green(T, mu, g)
    errors = []
    for N in N_list:
        u = _final_state(scheme, mu, g, T, N, u0, solver)
        errors.append(l2_norm(u - ref) if u is not None and ref is not None
                      else float("nan"))
    rates = _rates(errors)
    rows = [TableRow(N, e, r) for N, e, r in zip(N_list, errors, rates)]
    return ConvergenceTable(rows, scheme.value, mu, g.n, T)


def restrict_to(v: SpectralField, g: GridSpec) -> SpectralField:
    """Restrict a finer-grid field to the mode window of grid g."""
    if v.grid.n < g.n:
        raise ValueError("can only restrict to a coarser grid")
    c = _unpad(np.stack([v.u1, v.u2]), g.n, v.grid.n)
    return SpectralField(c[0], c[1], g, v.divfree)


def spatial_resolution_study(scheme: SchemeKind, mu: float, T: float, N: int,
                             n_list: Sequence[int], m: float = DEFAULT_M,
                             solver: Optional[SolverConfig] = None,
                             dump_dir: Optional[str] = None,
                             ic_builder=None) -> ConvergenceTable:
    """Grid-refinement differences at fixed stepsize, compared on the
    common mode set. For smooth-enough data the decay is super-algebraic."""
    _check_doubling(n_list, "grid")
    if ic_builder is None:
        ic_builder = lambda g: paper_initial_condition(m, g)
    finals = {}
    for n in list(n_list) + [2 * n_list[-1]]:
        g = GridSpec(n)
        finals[n] = _final_state(scheme, mu, g, T, N, ic_builder(g), solver)
    _dump_finals(finals, "n", dump_dir)
    errors = []
    for n in n_list:
        a, b = finals[n], finals[2 * n]
        errors.append(l2_norm(a - restrict_to(b, GridSpec(n)))
                      if a is not None and b is not None else float("nan"))
    rates = _rates(errors)
    rows = [TableRow(n, e, r) for n, e, r in zip(n_list, errors, rates)]
    return ConvergenceTable(rows, scheme.value, mu, n_list[-1], T, index_label="n")


def _fmt(value: Optional[float], exact: bool) -> str:
    if value is None:
        return ""
    if not math.isfinite(value):
        return "NAN"
    return repr(value) if exact else f"{value:.4e}"


def emit_table(t: ConvergenceTable, format: str, path: str | os.PathLike) -> None:
    """Write a table as csv, markdown or json. Non-finite entries render
    as the literal string NAN; CSV floats round-trip exactly."""
    if format == "csv":
        lines = ["N,error,rate"]
        for r in t.rows:
            lines.append(f"{r.index},{_fmt(r.error, True)},{_fmt(r.rate, True)}")
        text = "\n".join(lines) + "\n"
    elif format == "markdown":
        head = [t.index_label] + [str(r.index) for r in t.rows] + ["rate"]
        rate = t.headline_rate
        cells = [t.scheme] + [_fmt(r.error, False) for r in t.rows] \
            + [("" if rate is None else "NAN" if not math.isfinite(rate)
                else f"{rate:.3f}")]
        text = "| " + " | ".join(head) + " |\n" \
            + "|" + "---|" * len(head) + "\n" \
            + "| " + " | ".join(cells) + " |\n"
    elif format == "json":
        def jsonable(x):
            if x is None or (isinstance(x, float) and not math.isfinite(x)):
                return None if x is None else "NAN"
            return x
        doc = {
            "scheme": t.scheme, "mu": t.mu, "n": t.n, "T": t.T,
            "index_label": t.index_label,
            "rows": [{t.index_label: r.index, "error": jsonable(r.error),
                      "rate": jsonable(r.rate)} for r in t.rows],
            "headline_rate": jsonable(t.headline_rate),
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        raise ValueError(f"unknown table format {format!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def read_table_csv(path: str | os.PathLike) -> list[TableRow]:
    """Parse a CSV table written by emit_table (exact float round trip)."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "N,error,rate":
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx, err, rate = line.split(",")
            rows.append(TableRow(
                int(idx),
                float("nan") if err == "NAN" else float(err),
                None if rate == "" else float("nan") if rate == "NAN" else float(rate),
            ))
    return rows

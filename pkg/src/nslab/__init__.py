"""Pseudo-spectral solver laboratory for 2D incompressible Navier-Stokes
on the periodic torus: a semi-implicit low-regularity integrator next to
semi-implicit Euler and exponential Euler baselines, with convergence and
robustness studies."""

from .experiments import (
    ConvergenceTable,
    TableRow,
    emit_table,
    low_mode_perturbation,
    paper_initial_condition,
    read_table_csv,
    spatial_resolution_study,
    taylor_green,
    taylor_green_convergence,
    time_self_convergence,
)
from .fieldio import read_nsf1, write_nsf1
from .integrators import (
    NonConvergence,
    RunConfig,
    SchemeKind,
    SolverConfig,
    StepDiagnostics,
    iterative_solve,
    local_truncation_probe,
    run,
    step,
    step_explicit_lri,
    step_exponential_euler,
    step_lri,
    step_semi_implicit_euler,
)
from .nonlinear import ConvectionOperator, convect, projected_convect
from .operators import (
    MultiplierKind,
    MultiplierTable,
    heat_semigroup,
    inverse_helmholtz,
    leray_project,
    multiplier_table,
    phi1,
    phi1_apply,
)
from .spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    dealiased_product,
    derivative,
    divergence_inf,
    forward,
    inner_product,
    inverse,
    l2_norm,
    l2_norm_physical,
    strip_nyquist,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceTable", "TableRow", "emit_table", "low_mode_perturbation",
    "paper_initial_condition", "read_table_csv", "spatial_resolution_study",
    "taylor_green", "taylor_green_convergence", "time_self_convergence",
    "read_nsf1", "write_nsf1",
    "NonConvergence", "RunConfig", "SchemeKind", "SolverConfig",
    "StepDiagnostics", "iterative_solve", "local_truncation_probe", "run",
    "step", "step_explicit_lri", "step_exponential_euler", "step_lri",
    "step_semi_implicit_euler",
    "ConvectionOperator", "convect", "projected_convect",
    "MultiplierKind", "MultiplierTable", "heat_semigroup", "inverse_helmholtz",
    "leray_project", "multiplier_table", "phi1", "phi1_apply",
    "GridSpec", "PhysicalField", "SpectralField", "dealiased_product",
    "derivative", "divergence_inf", "forward", "inner_product", "inverse",
    "l2_norm", "l2_norm_physical", "strip_nyquist",
]

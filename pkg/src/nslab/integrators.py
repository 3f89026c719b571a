"""Time-stepping schemes and the matrix-free iterative solver.

Four schemes over one step of size tau with viscosity mu, all acting on
divergence-free spectral fields (S = heat semigroup, P = Leray projection):

* lri:           u_n + tau P[S u_{n-1} . grad u_n] = S u_{n-1}   (implicit)
* explicit-lri:  u_n = S u_{n-1} - tau P[S u_{n-1} . grad S u_{n-1}]
* exp-euler:     u_n = S u_{n-1} - tau phi1 P[u_{n-1} . grad u_{n-1}]
* semi-euler:    u_n - tau mu Lap u_n + tau P[u_{n-1} . grad u_n] = u_{n-1}

The implicit advection systems are solved matrix-free. Coefficient arrays
of real fields form a real vector space (Hermitian symmetry), so the
Krylov iteration runs over real vectors: complex128 arrays are viewed as
interleaved float64 without copying.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .nonlinear import ConvectionOperator
from .operators import heat_semigroup, inverse_helmholtz, leray_project, phi1_apply
from .spectral import GridSpec, SpectralField, divergence_inf, l2_norm

ENERGY_BLOWUP_FACTOR = 1e3


class SchemeKind(str, enum.Enum):
    LRI = "lri"
    EXPLICIT_LRI = "explicit-lri"
    SEMI_IMPLICIT_EULER = "semi-euler"
    EXPONENTIAL_EULER = "exp-euler"


@dataclass
class SolverConfig:
    """Settings for the implicit-system solves."""

    rel_tol: float = 1e-10
    max_iter: int = 500
    restart: int = 30
    method: str = "krylov"  # "krylov" | "fixed-point"

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1, got {self.restart}")
        if self.method not in ("krylov", "fixed-point"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class RunConfig:
    """One complete time-marching configuration."""

    mu: float
    schedule: Sequence[float]
    grid: GridSpec
    scheme: SchemeKind
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError(f"viscosity must be nonnegative, got {self.mu}")
        sched = np.asarray(self.schedule, dtype=np.float64)
        if sched.size and (not np.all(np.isfinite(sched)) or np.any(sched <= 0)):
            raise ValueError("all stepsizes must be positive and finite")


@dataclass
class StepDiagnostics:
    """Per-step health record."""

    step: int
    energy: float
    divergence_inf: float
    solver_iterations: int
    solver_residual: float
    finite: bool


class NonConvergence(RuntimeError):
    """Iterative solve exceeded its iteration budget.

    Signals a stepsize too large for the solver configuration, not an
    instability of the scheme itself.
    """

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"iterative solve did not converge: {iterations} iterations, "
            f"relative residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


def _as_vector(v: SpectralField) -> np.ndarray:
    return np.ascontiguousarray(
        np.stack([v.u1, v.u2])).view(np.float64).ravel()


def _from_vector(x: np.ndarray, g: GridSpec, divfree: bool) -> SpectralField:
    c = x.view(np.complex128).reshape(2, g.n, g.n)
    return SpectralField(c[0].copy(), c[1].copy(), g, divfree)


def _gmres(apply_vec: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
           x0: np.ndarray, cfg: SolverConfig) -> tuple[np.ndarray, int, float]:
    """Restarted minimal-residual Krylov iteration (real arithmetic).

    Arnoldi with modified Gram-Schmidt and Givens rotations; the true
    residual is recomputed at every restart boundary. Returns
    (x, iterations, relative residual) or raises NonConvergence.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    tol = cfg.rel_tol * bnorm
    x = x0.copy()
    total = 0
    while True:
        r = b - apply_vec(x)
        beta = float(np.linalg.norm(r))
        if beta <= tol:
            return x, total, beta / bnorm
        if total >= cfg.max_iter:
            raise NonConvergence(total, beta / bnorm)
        m = cfg.restart
        Q = np.empty((m + 1, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        Q[0] = r / beta
        g[0] = beta
        j = 0
        while j < m and total < cfg.max_iter:
            v = apply_vec(Q[j])
            for i in range(j + 1):
                H[i, j] = float(Q[i] @ v)
                v -= H[i, j] * Q[i]
            hn = float(np.linalg.norm(v))
            H[j + 1, j] = hn
            if hn > 0.0:
                Q[j + 1] = v / hn
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            d = float(np.hypot(H[j, j], H[j + 1, j]))
            cs[j] = H[j, j] / d if d else 1.0
            sn[j] = H[j + 1, j] / d if d else 0.0
            H[j, j] = d
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            j += 1
            if abs(g[j]) <= tol or hn == 0.0:
                break
        y = np.linalg.solve(np.triu(H[:j, :j]), g[:j])
        x = x + Q[:j].T @ y


def _fixed_point(apply_vec: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
                 x0: np.ndarray, cfg: SolverConfig) -> tuple[np.ndarray, int, float]:
    """Richardson sweep x <- b - (A - I)x; diverges when ||A - I|| >= 1."""
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    tol = cfg.rel_tol * bnorm
    x = x0.copy()
    r = b - apply_vec(x)
    best = float(np.linalg.norm(r))
    for it in range(1, cfg.max_iter + 1):
        res = float(np.linalg.norm(r))
        if res <= tol:
            return x, it - 1, res / bnorm
        if not np.isfinite(res) or res > 1e6 * best:
            raise NonConvergence(it - 1, res / bnorm)
        best = min(best, res)
        x = x + r
        r = b - apply_vec(x)
    res = float(np.linalg.norm(r))
    if res <= tol:
        return x, cfg.max_iter, res / bnorm
    raise NonConvergence(cfg.max_iter, res / bnorm)


def iterative_solve(apply: Callable[[SpectralField], SpectralField],
                    rhs: SpectralField,
                    precond: Optional[Callable[[SpectralField], SpectralField]] = None,
                    cfg: Optional[SolverConfig] = None,
                    x0: Optional[SpectralField] = None) -> tuple[SpectralField, int, float]:
    """Solve apply(x) = rhs matrix-free on the divergence-free subspace.

    With a (left) preconditioner M the iteration runs on M(apply(x)) =
    M(rhs), tightening until the residual of the original system meets
    cfg.rel_tol * ||rhs||. Returns (x, iterations, relative residual).
    """
    cfg = cfg or SolverConfig()
    g = rhs.grid
    divfree = rhs.divfree

    def wrap(op):
        def vec_op(xv: np.ndarray) -> np.ndarray:
            return _as_vector(op(_from_vector(xv, g, divfree)))
        return vec_op

    apply_vec = wrap(apply)
    b = _as_vector(rhs)
    xv0 = _as_vector(x0) if x0 is not None else np.zeros_like(b)
    inner = _gmres if cfg.method == "krylov" else _fixed_point

    if precond is None:
        xv, its, res = inner(apply_vec, b, xv0, cfg)
        return _from_vector(xv, g, divfree), its, res

    precond_vec = wrap(precond)
    mb = precond_vec(b)
    bnorm = float(np.linalg.norm(b))
    target = cfg.rel_tol
    total = 0
    xv = xv0
    while True:
        sub = SolverConfig(rel_tol=target, max_iter=cfg.max_iter,
                           restart=cfg.restart, method=cfg.method)
        xv, its, _ = inner(lambda v: precond_vec(apply_vec(v)), mb, xv, sub)
        total += its
        true_res = float(np.linalg.norm(b - apply_vec(xv)))
        rel = true_res / bnorm if bnorm else 0.0
        if rel <= cfg.rel_tol:
            return _from_vector(xv, g, divfree), total, rel
        if total >= cfg.max_iter:
            raise NonConvergence(total, rel)
        target *= 0.1


def _diagnostics(u: SpectralField, iterations: int, residual: float) -> StepDiagnostics:
    with np.errstate(over="ignore", invalid="ignore"):
        energy = l2_norm(u)
        div = divergence_inf(u)
    finite = bool(np.isfinite(energy) and np.isfinite(div))
    return StepDiagnostics(step=0, energy=energy, divergence_inf=div,
                           solver_iterations=iterations, solver_residual=residual,
                           finite=finite)


def step_lri(u_prev: SpectralField, tau: float, mu: float,
             solver: Optional[SolverConfig] = None) -> tuple[SpectralField, StepDiagnostics]:
    """Semi-implicit low-regularity step: advect the unknown by the heated
    previous state, then solve the shifted-skew linear system."""
    w = heat_semigroup(u_prev, tau, mu)
    conv = ConvectionOperator(w)

    def apply(x: SpectralField) -> SpectralField:
        return x + tau * leray_project(conv.apply(x))

    u, its, res = iterative_solve(apply, w, cfg=solver, x0=w)
    u.divfree = True
    return u, _diagnostics(u, its, res)


def step_explicit_lri(u_prev: SpectralField, tau: float, mu: float
                      ) -> tuple[SpectralField, StepDiagnostics]:
    """Fully explicit variant: both convection factors at the heated state."""
    w = heat_semigroup(u_prev, tau, mu)
    conv = ConvectionOperator(w)
    u = w - tau * leray_project(conv.apply(w))
    u.divfree = True
    return u, _diagnostics(u, 0, 0.0)


def step_exponential_euler(u_prev: SpectralField, tau: float, mu: float
                           ) -> tuple[SpectralField, StepDiagnostics]:
    """Exponential Euler with exact phi1 quadrature of the viscous integral."""
    conv = ConvectionOperator(u_prev)
    u = heat_semigroup(u_prev, tau, mu) \
        - tau * phi1_apply(leray_project(conv.apply(u_prev)), tau, mu)
    u.divfree = True
    return u, _diagnostics(u, 0, 0.0)


def step_semi_implicit_euler(u_prev: SpectralField, tau: float, mu: float,
                             solver: Optional[SolverConfig] = None
                             ) -> tuple[SpectralField, StepDiagnostics]:
    """Implicit viscosity plus linearized-implicit convection, solved with
    an inverse-Helmholtz left preconditioner."""
    conv = ConvectionOperator(u_prev)
    visc = 4.0 * np.pi ** 2 * mu * tau * u_prev.grid.k2

    def apply(x: SpectralField) -> SpectralField:
        y = x + tau * leray_project(conv.apply(x))
        return SpectralField(y.u1 + visc * x.u1, y.u2 + visc * x.u2, x.grid, y.divfree)

    def precond(x: SpectralField) -> SpectralField:
        return inverse_helmholtz(x, tau, mu)

    u, its, res = iterative_solve(apply, u_prev, precond=precond, cfg=solver,
                                  x0=inverse_helmholtz(u_prev, tau, mu))
    u.divfree = True
    return u, _diagnostics(u, its, res)


_IMPLICIT_STEPS = {
    SchemeKind.LRI: step_lri,
    SchemeKind.SEMI_IMPLICIT_EULER: step_semi_implicit_euler,
}
_EXPLICIT_STEPS = {
    SchemeKind.EXPLICIT_LRI: step_explicit_lri,
    SchemeKind.EXPONENTIAL_EULER: step_exponential_euler,
}


def step(scheme: SchemeKind, u_prev: SpectralField, tau: float, mu: float,
         solver: Optional[SolverConfig] = None) -> tuple[SpectralField, StepDiagnostics]:
    """Dispatch one step of the selected scheme."""
    if scheme in _IMPLICIT_STEPS:
        return _IMPLICIT_STEPS[scheme](u_prev, tau, mu, solver)
    return _EXPLICIT_STEPS[scheme](u_prev, tau, mu)


def run(cfg: RunConfig, u0: SpectralField) -> tuple[SpectralField, list[StepDiagnostics]]:
    """March the selected scheme over the step schedule.

    Stops early with finite=False on the offending record if any
    coefficient becomes non-finite or the energy exceeds 1e3 times the
    initial energy; blow-up is a reported result, not an error.
    """
    if not u0.divfree:
        raise ValueError("initial state must be flagged divergence-free")
    e0 = l2_norm(u0)
    u = u0
    diags: list[StepDiagnostics] = []
    for i, tau in enumerate(cfg.schedule):
        u, d = step(cfg.scheme, u, float(tau), cfg.mu, cfg.solver)
        d.step = i + 1
        if d.finite and d.energy > ENERGY_BLOWUP_FACTOR * e0:
            d.finite = False
        diags.append(d)
        if not d.finite:
            break
    return u, diags


def local_truncation_probe(scheme: SchemeKind, u_ref: SpectralField, tau: float,
                           mu: float, refinement: int = 64,
                           solver: Optional[SolverConfig] = None) -> float:
    """One-step defect against a heavily refined trajectory.

    Compares a single step of size tau with `refinement` lri substeps of
    size tau/refinement from the same state; the L2 difference scales as
    O(tau^2) for all first-order schemes here.
    """
    if refinement < 64:
        raise ValueError(f"refinement must be >= 64, got {refinement}")
    if not u_ref.divfree:
        raise ValueError("reference state must be flagged divergence-free")
    if tau == 0.0:
        return 0.0
    coarse, _ = step(scheme, u_ref, tau, mu, solver)
    fine = u_ref
    sub = tau / refinement
    for _ in range(refinement):
        fine, _ = step_lri(fine, sub, mu, solver)
    return l2_norm(coarse - fine)

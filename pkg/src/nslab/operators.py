"""Leray projection and the diagonal viscous operators.

On the divergence-free subspace of the periodic torus the Stokes operator
coincides with the Laplacian, so the heat semigroup, its phi1 quadrature
weight and the inverse Helmholtz solve are all diagonal Fourier
multipliers with per-mode argument z = -4*pi^2*mu*t*|k|^2.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, SpectralField, l2_norm

PHI1_SERIES_THRESHOLD = 1e-5


class MultiplierKind(str, enum.Enum):
    HEAT = "heat"
    PHI1 = "phi1"
    INVERSE_HELMHOLTZ = "inverse-helmholtz"


@dataclass(frozen=True)
class MultiplierTable:
    """Per-mode real factors of one diagonal operator at a fixed t*mu."""

    kind: MultiplierKind
    tmu: float
    factors: np.ndarray


def phi1(z):
    """phi1(z) = (exp(z) - 1) / z, with phi1(0) = 1.

    A four-term Taylor series is used for |z| < 1e-5 to avoid
    cancellation in the direct formula.
    """
    arr = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty_like(arr)
    small = np.abs(arr) < PHI1_SERIES_THRESHOLD
    zs = arr[small]
    out[small] = 1.0 + zs / 2.0 + zs ** 2 / 6.0 + zs ** 3 / 24.0
    zb = arr[~small]
    out[~small] = np.expm1(zb) / zb
    return float(out[0]) if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


@functools.lru_cache(maxsize=128)
def multiplier_table(kind: MultiplierKind, n: int, tmu: float) -> MultiplierTable:
    """Build (and cache) the factor array for one operator and one t*mu."""
    k2 = GridSpec(n).k2
    z = -4.0 * np.pi ** 2 * tmu * k2
    if kind is MultiplierKind.HEAT:
        factors = np.exp(z)
    elif kind is MultiplierKind.PHI1:
        factors = np.asarray(phi1(z))
    elif kind is MultiplierKind.INVERSE_HELMHOLTZ:
        factors = 1.0 / (1.0 - z)
    else:
        raise ValueError(f"unknown multiplier kind {kind!r}")
    factors.setflags(write=False)
    return MultiplierTable(kind, tmu, factors)


def _checked_tmu(t: float, mu: float) -> float:
    if t < 0 or mu < 0:
        raise ValueError(f"time and viscosity must be nonnegative, got t={t}, mu={mu}")
    return t * mu


def _apply_table(v: SpectralField, table: MultiplierTable) -> SpectralField:
    f = table.factors
    return SpectralField(v.u1 * f, v.u2 * f, v.grid, v.divfree)


def leray_project(f: SpectralField) -> SpectralField:
    """L2-orthogonal projection onto divergence-free fields.

    Per mode k != 0: uhat <- uhat - k (k . uhat) / |k|^2; the k = 0 mode
    (the field mean) passes through unchanged. Equivalent to subtracting
    the gradient part of the Helmholtz decomposition.
    """
    g = f.grid
    k2 = g.k2.copy()
    k2[0, 0] = 1.0
    dot = (g.kx * f.u1 + g.ky * f.u2) / k2
    return SpectralField(f.u1 - g.kx * dot, f.u2 - g.ky * dot, g, divfree=True)


def heat_semigroup(v: SpectralField, t: float, mu: float) -> SpectralField:
    """Apply the viscous semigroup: each mode scaled by exp(-4*pi^2*mu*t*|k|^2)."""
    table = multiplier_table(MultiplierKind.HEAT, v.grid.n, _checked_tmu(t, mu))
    out = _apply_table(v, table)
    assert l2_norm(out) <= l2_norm(v) * (1.0 + 1e-13), "semigroup must contract"
    return out


def phi1_apply(v: SpectralField, t: float, mu: float) -> SpectralField:
    """Apply phi1 of the viscous generator, the quadrature weight of the
    semigroup integral over one step."""
    table = multiplier_table(MultiplierKind.PHI1, v.grid.n, _checked_tmu(t, mu))
    return _apply_table(v, table)


def inverse_helmholtz(v: SpectralField, t: float, mu: float) -> SpectralField:
    """Solve (I - t*mu*Laplacian) x = v; each mode scaled by 1/(1 + 4*pi^2*mu*t*|k|^2)."""
    table = multiplier_table(MultiplierKind.INVERSE_HELMHOLTZ, v.grid.n, _checked_tmu(t, mu))
    return _apply_table(v, table)


def laplacian(v: SpectralField) -> SpectralField:
    """Componentwise Laplacian, -4*pi^2*|k|^2 per mode."""
    f = -4.0 * np.pi ** 2 * v.grid.k2
    return SpectralField(v.u1 * f, v.u2 * f, v.grid, v.divfree)

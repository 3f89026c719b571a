"""Grids, Fourier transforms, spectral derivatives and alias-free products.

Conventions used throughout the package:

* The domain is the unit torus [0,1] x [0,1]. Physical arrays have shape
  (n, n) and are indexed [j, i] with sample points x_i = i/n, y_j = j/n,
  i.e. row-major storage with x varying fastest.
* Spectral arrays are complex (n, n) in standard FFT ordering; axis 1
  carries kx, axis 0 carries ky, with integer wavenumbers in
  {-n/2, ..., n/2 - 1} per dimension.
* The forward transform divides by n**2, so the mode k = 0 holds the
  field mean and Parseval reads mean(|f|^2) = sum(|fhat|^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as _fft

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Resolution and wavenumber layout of the periodic torus discretization.

    n must be even and at least 8 so that the 3/2-rule padded grid
    (3n/2 points per dimension) is an integer size.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n}")
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.float64)
        kx = np.broadcast_to(k[None, :], (self.n, self.n)).copy()
        ky = np.broadcast_to(k[:, None], (self.n, self.n)).copy()
        k2 = kx ** 2 + ky ** 2
        for arr in (k, kx, ky, k2):
            arr.setflags(write=False)
        object.__setattr__(self, "k1d", k)
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)
        object.__setattr__(self, "k2", k2)

    @property
    def padded(self) -> int:
        """Grid size of the 3/2-rule padded transform."""
        return 3 * self.n // 2

    @property
    def nyquist(self) -> int:
        """FFT slot of the k = -n/2 mode."""
        return self.n // 2

    def sample_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Return meshgrids X[j, i] = i/n and Y[j, i] = j/n."""
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x)


@dataclass
class PhysicalField:
    """Real-space samples of a two-component velocity field."""

    u1: np.ndarray
    u2: np.ndarray
    grid: GridSpec

    def copy(self) -> "PhysicalField":
        return PhysicalField(self.u1.copy(), self.u2.copy(), self.grid)


@dataclass
class SpectralField:
    """Fourier coefficients of a two-component velocity field.

    divfree marks fields known to satisfy k . uhat(k) = 0 for every
    mode k != 0 (set by the Leray projection and preserved by all
    diagonal multipliers).
    """

    u1: np.ndarray
    u2: np.ndarray
    grid: GridSpec
    divfree: bool = False

    def copy(self) -> "SpectralField":
        return SpectralField(self.u1.copy(), self.u2.copy(), self.grid, self.divfree)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.u1 + other.u1, self.u2 + other.u2, self.grid,
                             self.divfree and other.divfree)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.u1 - other.u1, self.u2 - other.u2, self.grid,
                             self.divfree and other.divfree)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(a * self.u1, a * self.u2, self.grid, self.divfree)

    __rmul__ = __mul__


def zeros(g: GridSpec, divfree: bool = True) -> SpectralField:
    z = np.zeros((g.n, g.n), dtype=np.complex128)
    return SpectralField(z, z.copy(), g, divfree)


def forward(f: PhysicalField, g: GridSpec) -> SpectralField:
    """Transform physical samples to normalized Fourier coefficients."""
    if f.u1.shape != (g.n, g.n) or f.u2.shape != (g.n, g.n):
        raise ValueError(f"field shape {f.u1.shape} does not match grid n={g.n}")
    scale = 1.0 / g.n ** 2
    return SpectralField(_fft.fft2(f.u1) * scale, _fft.fft2(f.u2) * scale, g)


def hermitian_defect(v: SpectralField) -> float:
    """Largest deviation from the conjugate symmetry of a real field."""
    idx = (-np.arange(v.grid.n)) % v.grid.n
    d = 0.0
    for c in (v.u1, v.u2):
        d = max(d, float(np.max(np.abs(c - np.conj(c[np.ix_(idx, idx)])))))
    return d


def inverse(v: SpectralField, g: GridSpec) -> PhysicalField:
    """Transform coefficients back to real samples.

    Raises if the coefficients violate Hermitian symmetry beyond the
    relative tolerance (the field would not be real-valued).
    """
    scale = max(float(np.max(np.abs(v.u1))), float(np.max(np.abs(v.u2))))
    if hermitian_defect(v) > HERMITIAN_RTOL * max(scale, 1e-300):
        raise ValueError("spectral field violates Hermitian symmetry; not a real field")
    n2 = g.n ** 2
    u1 = _fft.ifft2(v.u1 * n2).real
    u2 = _fft.ifft2(v.u2 * n2).real
    return PhysicalField(u1, u2, g)


def strip_nyquist(c: np.ndarray, g: GridSpec) -> np.ndarray:
    """Zero the k = -n/2 row and column, restricting to the symmetric window."""
    out = c.copy()
    out[g.nyquist, :] = 0.0
    out[:, g.nyquist] = 0.0
    return out


def derivative_coeffs(c: np.ndarray, axis: int, g: GridSpec) -> np.ndarray:
    """Spectral derivative of a scalar coefficient array.

    axis=1 differentiates in x, axis=2 in y. The Nyquist line of the
    differentiated axis is zeroed so derivatives of real fields stay real
    and the operator is skew-adjoint.
    """
    if axis not in (1, 2):
        raise ValueError("axis must be 1 (x) or 2 (y)")
    mult = 2j * np.pi * g.k1d.copy()
    mult[g.nyquist] = 0.0
    return c * (mult[None, :] if axis == 1 else mult[:, None])


def derivative(v: SpectralField, axis: int) -> SpectralField:
    """Componentwise spectral derivative of a vector field."""
    g = v.grid
    return SpectralField(derivative_coeffs(v.u1, axis, g),
                         derivative_coeffs(v.u2, axis, g), g, v.divfree)


def _pad(c: np.ndarray, n: int, m: int) -> np.ndarray:
    h = n // 2
    out = np.zeros(c.shape[:-2] + (m, m), dtype=np.complex128)
    out[..., :h, :h] = c[..., :h, :h]
    out[..., :h, m - h:] = c[..., :h, h:]
    out[..., m - h:, :h] = c[..., h:, :h]
    out[..., m - h:, m - h:] = c[..., h:, h:]
    return out


def _unpad(c: np.ndarray, n: int, m: int) -> np.ndarray:
    h = n // 2
    out = np.empty(c.shape[:-2] + (n, n), dtype=np.complex128)
    out[..., :h, :h] = c[..., :h, :h]
    out[..., :h, h:] = c[..., :h, m - h:]
    out[..., h:, :h] = c[..., m - h:, :h]
    out[..., h:, h:] = c[..., m - h:, m - h:]
    return out


def pad_to_fine(c: np.ndarray, g: GridSpec) -> np.ndarray:
    """Evaluate coefficients on the 3n/2 grid (complex samples)."""
    m = g.padded
    return _fft.ifft2(_pad(c, g.n, m), axes=(-2, -1)) * m ** 2


def fine_to_coeffs(samples: np.ndarray, g: GridSpec) -> np.ndarray:
    """Transform 3n/2-grid samples back and truncate to the n-grid window."""
    m = g.padded
    return _unpad(_fft.fft2(samples, axes=(-2, -1)) / m ** 2, g.n, m)


def dealiased_product(a: np.ndarray, b: np.ndarray, g: GridSpec) -> np.ndarray:
    """Coefficients of the pointwise product of two scalar fields.

    Both factors are zero-padded to 3n/2 modes per dimension, multiplied
    in physical space and truncated back, so the result is the exact
    convolution of the coefficient arrays: no aliasing error for
    products of two band-limited fields.
    """
    if a.shape != (g.n, g.n) or b.shape != (g.n, g.n):
        raise ValueError(f"coefficient shape does not match grid n={g.n}")
    return fine_to_coeffs(pad_to_fine(a, g) * pad_to_fine(b, g), g)


def l2_norm(v: SpectralField) -> float:
    """L2 norm over the unit torus, computed from coefficients (Parseval)."""
    return float(np.sqrt(np.sum(np.abs(v.u1) ** 2) + np.sum(np.abs(v.u2) ** 2)))


def l2_norm_physical(f: PhysicalField) -> float:
    """L2 norm over the unit torus: sqrt of the mean of |f|^2 samples."""
    return float(np.sqrt(np.mean(f.u1 ** 2 + f.u2 ** 2)))


def inner_product(a: SpectralField, b: SpectralField) -> complex:
    """Spectral inner product (a, b) = sum_k a(k) conj(b(k))."""
    return complex(np.vdot(b.u1, a.u1) + np.vdot(b.u2, a.u2))


def divergence_coeffs(v: SpectralField) -> np.ndarray:
    """Per-mode divergence 2*pi*i*(kx*u1 + ky*u2)."""
    g = v.grid
    return 2j * np.pi * (g.kx * v.u1 + g.ky * v.u2)


def divergence_inf(v: SpectralField) -> float:
    """Largest per-mode divergence magnitude."""
    return float(np.max(np.abs(divergence_coeffs(v))))

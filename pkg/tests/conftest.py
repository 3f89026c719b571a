import numpy as np
import pytest

from nslab import GridSpec, PhysicalField, SpectralField, forward, leray_project


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_physical(g: GridSpec, rng) -> PhysicalField:
    return PhysicalField(rng.standard_normal((g.n, g.n)),
                         rng.standard_normal((g.n, g.n)), g)


def random_field(g: GridSpec, rng) -> SpectralField:
    return forward(random_physical(g, rng), g)


def random_divfree(g: GridSpec, rng) -> SpectralField:
    return leray_project(random_field(g, rng))


def random_scalar_coeffs(g: GridSpec, rng) -> np.ndarray:
    """Hermitian coefficient array of a random real scalar field."""
    return np.fft.fft2(rng.standard_normal((g.n, g.n))) / g.n ** 2

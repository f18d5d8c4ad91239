import numpy as np
import pytest

from sglab import gff, spectral, wick


@pytest.fixture(scope="session")
def square():
    return spectral.DomainSpec.unit_square()


@pytest.fixture(scope="session")
def basis16(square):
    return spectral.build_basis(square, 16)


@pytest.fixture(scope="session")
def small_rho():
    return wick.TestFunction.smooth_bump((0.5, 0.5), 0.2)


@pytest.fixture(scope="session")
def cache16(basis16, small_rho):
    return gff.build_cache(basis16, 0.1, 24, support=(small_rho.center, small_rho.radius))


@pytest.fixture
def rng():
    return np.random.default_rng(0)

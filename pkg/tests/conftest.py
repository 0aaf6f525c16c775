"""Test configuration and fixtures."""

import pytest

from src.config.settings import Settings
from src.expansion.models import SdeModel
from src.expansion.operators import build_expansion
from src.spectral.kolmogorov import SpectralConfig, stationary_density
from src.spectral.measures import mu_hierarchy


@pytest.fixture
def test_settings():
    """Test settings fixture."""
    return Settings(_env_file=None)


@pytest.fixture(scope="session")
def langevin():
    """f = -sin, sigma = sqrt(2); invariant density proportional to exp(cos x)."""
    return SdeModel.langevin()


@pytest.fixture(scope="session")
def brownian():
    return SdeModel.brownian()


@pytest.fixture(scope="session")
def constant_model():
    """Constant coefficients, for which the Euler scheme is exact in law."""
    return SdeModel.constant(0.7, 1.1)


@pytest.fixture
def spectral_cfg():
    return SpectralConfig()


@pytest.fixture
def small_cfg():
    """Low truncation for the stiff hierarchy solves."""
    return SpectralConfig(bandwidth=12)


@pytest.fixture(scope="session")
def langevin_expansion(langevin):
    return build_expansion(langevin, 3)


@pytest.fixture(scope="session")
def langevin_measures(langevin_expansion):
    cfg = SpectralConfig()
    rho = stationary_density(langevin_expansion.L[0], cfg)
    return mu_hierarchy(langevin_expansion.L, rho, cfg, 2)

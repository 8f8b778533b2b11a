"""
Pytest configuration and shared fixtures.
"""
import os

import pytest
from fastapi.testclient import TestClient


# Set up test environment variables BEFORE any imports that need them
def pytest_configure(config):
    """Configure pytest and set up test environment."""
    os.environ["PHASEQUANT_LOG"] = "WARNING"
    os.environ["PHASEQUANT_REL_TOL"] = "1e-10"
    os.environ["PHASEQUANT_ROOT_REL_TOL"] = "1e-12"
    os.environ["PHASEQUANT_SCAN_SAMPLES"] = "2048"
    os.environ["PHASEQUANT_WORKERS"] = "1"
    os.environ["PHASEQUANT_HOST"] = "127.0.0.1"
    os.environ["PHASEQUANT_PORT"] = "8000"

    # Reinitialize settings with test environment
    from src.phasequant import config
    config.settings = config.Settings()


@pytest.fixture
def harmonic():
    """Harmonic oscillator with m = ω = ħ = 1."""
    from src.phasequant.problem import Potential, QuantProblem
    return QuantProblem(potential=Potential.harmonic(1.0))


@pytest.fixture
def coulomb():
    """Factory for hydrogen-like problems with the Langer term (m = e² = ħ = 1)."""
    from src.phasequant.problem import Potential, QuantProblem

    def build(l: int = 0) -> QuantProblem:
        return QuantProblem(potential=Potential.coulomb(1.0), angular=l)
    return build


@pytest.fixture
def cornell_params():
    """Massless Cornell parameters used throughout the examples."""
    from src.phasequant.cornell import CornellParams
    return CornellParams(m=0.0, alpha_tilde=0.5, kappa=0.2, l=0)


@pytest.fixture
def service():
    """The global quantization service, for patching in API tests."""
    from src.phasequant.service import quant_service
    return quant_service


@pytest.fixture
def test_client():
    """Create a test client for the FastAPI app."""
    from src.phasequant.main import app
    return TestClient(app)


@pytest.fixture
def harmonic_config():
    """RunConfig payload for the harmonic spectrum."""
    return {
        "command": "spectrum",
        "potential": {"kind": "harmonic", "omega": 1.0},
        "n_max": 2,
    }

import numpy as np
import pytest
from hypothesis import settings

from kinetic_relax import boltzmann as bz

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def real_field(rng, dim, cutoff):
    """Random real spectrum built from grid samples."""
    from kinetic_relax.spectral import to_spectrum
    return to_spectrum(rng.standard_normal((2 * cutoff + 1,) * dim))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quad():
    return bz.VelocityQuadrature()


@pytest.fixture(scope="session")
def hard_bilinear(quad):
    return bz.assemble_dirichlet_form(bz.CollisionKernelSpec(0.5, 0.5), quad)


@pytest.fixture(scope="session")
def hard_biquadratic(quad):
    return bz.assemble_dirichlet_form(bz.CollisionKernelSpec(0.5, 0.5), quad, "biquadratic")


@pytest.fixture(scope="session")
def soft_biquadratic(quad):
    return bz.assemble_dirichlet_form(bz.CollisionKernelSpec(-0.5, -0.5), quad, "biquadratic")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)

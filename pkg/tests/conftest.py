import numpy as np
import pytest
from hypothesis import settings

from fundiff.funcdata import BasisSpec, CurvePanel, TimeGrid, eval_basis

settings.register_profile("fundiff", max_examples=40, deadline=None)
settings.load_profile("fundiff")


def random_spd(rng, d, floor=0.5):
    A = rng.standard_normal((d, d))
    return A @ A.T / d + floor * np.eye(d)


def panel_from_coefs(coefs, basis, grid, sigma=0.0, rng=None):
    """Curves ``coefs @ b(t)^T`` on ``grid`` plus optional iid noise."""
    vals = coefs @ eval_basis(basis, grid).T
    if sigma:
        vals = vals + sigma * rng.standard_normal(vals.shape)
    return CurvePanel(grid=grid, values=vals)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid200():
    return TimeGrid.uniform(200)


@pytest.fixture
def orthonormal_cosines(grid200):
    """Disjoint-cosine bumps rescaled to unit L2 norm under trapezoid quadrature."""
    B = eval_basis(BasisSpec.disjoint_cosine(), grid200)
    w = grid200.trapezoid_weights()
    return B / np.sqrt(w @ B**2)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.acceptance_lines):
            terminalreporter.write_line(line)

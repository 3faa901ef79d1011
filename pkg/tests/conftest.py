import numpy as np
import pytest

from hybrid_control.core import ObservationTable

ACCEPTANCE_LINES = []


def make_table(seed=0, n_ext=30, n_ctl=15, n_trt=25, p=2, binary=False, shift=-0.5):
    """Small random hybrid-control table with covariates x1..xp."""
    rng = np.random.default_rng(seed)
    z = np.r_[np.zeros(n_ext), np.ones(n_ctl + n_trt)]
    a = np.r_[np.zeros(n_ext + n_ctl), np.ones(n_trt)]
    x = rng.normal(size=(z.size, p)) + shift * (1 - z)[:, None]
    eta = -0.3 + x @ np.linspace(0.5, -0.3, p) + 0.4 * a
    if binary:
        y = (rng.random(z.size) < 1 / (1 + np.exp(-eta))).astype(float)
    else:
        y = eta + rng.normal(size=z.size)
    return ObservationTable(z, a, y, x)


@pytest.fixture
def table():
    return make_table()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

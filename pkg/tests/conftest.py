import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memsim.control import ControlSolution  # noqa: E402
from memsim.params import PhysicalParams  # noqa: E402
from memsim.pipeline import solve_duration  # noqa: E402

SWEEP = (4.0, 8.0, 12.0, 16.0, 20.0)
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    """Reference set: C=200, gamma, kappa, Delta, omega_sg = 3, 2, 200, 10 MHz (/2pi)."""
    return PhysicalParams.from_mhz(200.0, 3.0, 2.0, 200.0, 10.0)


@pytest.fixture(scope="session")
def solved(params):
    cache = {}

    def get(tau_total, n=4096):
        key = (tau_total, n)
        if key not in cache:
            cache[key] = solve_duration(params, tau_total, n)
        return cache[key]

    return get


def null_control(t, spin_pop=1.0):
    """A ControlSolution with Omega identically zero."""
    n = len(t)
    z = np.zeros(n, dtype=complex)
    pop = np.full(n, spin_pop)
    return ControlSolution(t, z, pop, np.zeros(n), np.sqrt(pop) + 0j, z,
                           1.0 / spin_pop, spin_pop, 1e-3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

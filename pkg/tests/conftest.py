import json
from pathlib import Path

import numpy as np
import pytest

from lagctrl.control import ControlProblem
from lagctrl.gram import gram_matrix
from lagctrl.pde import GasModel, Grid

FIXTURES = Path(__file__).parent / "fixtures"

# verdict lines from the acceptance suite, echoed after the run summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line("  " + line)


@pytest.fixture(scope="session")
def gas():
    return GasModel(c=1.3, gamma=1.4)


@pytest.fixture(scope="session")
def fixture_problem():
    return ControlProblem(
        alphas=(0.3, 0.6), betas=(0.3007, 0.6011), T=2.0, omega=(1.5, 2.5), eta=0.1
    )


@pytest.fixture(scope="session")
def fixture_gram(fixture_problem, gas):
    return gram_matrix(fixture_problem, gas)


@pytest.fixture(scope="session")
def grid_small(gas):
    return Grid.from_cfl(256, 2.0, gas.c)


@pytest.fixture(scope="session")
def golden_synthesis():
    return json.loads((FIXTURES / "golden_synthesis.json").read_text())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)

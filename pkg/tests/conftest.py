from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from pfmpc.config import default_config
from pfmpc.dynamics import VehicleParams

SCENARIO_DIR = Path(str(resources.files("pfmpc").joinpath("data/scenarios")))


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIO_DIR


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

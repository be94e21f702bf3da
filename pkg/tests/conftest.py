import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polaron_dyn import ModelParams

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TWO_PI = 2.0 * math.pi


@pytest.fixture
def calib_params():
    return ModelParams(J=0.1, omega=1.0, g=0.5)


@pytest.fixture
def period_grid():
    return np.linspace(0.0, TWO_PI, 257)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

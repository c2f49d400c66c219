import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from l0stable.measure import MeasureAlgebra

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def uniform4():
    return MeasureAlgebra.uniform(4)


@pytest.fixture
def skewed3():
    return MeasureAlgebra([0.5, 0.3, 0.2])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

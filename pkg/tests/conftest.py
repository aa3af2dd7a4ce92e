import math

import pytest
from hypothesis import HealthCheck, settings

from tubeformula import (GeometricZeta, ScalingZeta, SelfSimilarSystem, complex_dimensions,
                         hexagram_builtin, hexagram_tiling_system, unit_square_builtin)

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")

PERIOD = 2 * math.pi / math.log(6)


@pytest.fixture(scope="session")
def hexagram():
    return hexagram_builtin()


@pytest.fixture(scope="session")
def hex_system():
    return hexagram_tiling_system()


@pytest.fixture(scope="session")
def hex_zeta(hex_system):
    return ScalingZeta.of(hex_system)


@pytest.fixture(scope="session")
def hex_dims(hex_zeta):
    # window reaching n = 1000 of the pole family
    return complex_dimensions(hex_zeta, 1000 * PERIOD + 1.0, d=2)


@pytest.fixture(scope="session")
def hex_gz(hex_zeta, hexagram):
    return GeometricZeta(hex_zeta, hexagram[1])


@pytest.fixture(scope="session")
def square():
    return unit_square_builtin()


@pytest.fixture(scope="session")
def toy_system():
    return SelfSimilarSystem.uniform(3, 0.5)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import os

import pytest
from hypothesis import HealthCheck, settings

from busnoise.circuit import NoiseParams, build_memory_circuit
from busnoise.geometry import build_layout

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

NOISY = NoiseParams(cer=0.002, ber=0.003)


@pytest.fixture(scope="session")
def layout3():
    return build_layout(3)


@pytest.fixture(scope="session")
def layout5():
    return build_layout(5)


@pytest.fixture(scope="session")
def circuit3(layout3):
    return build_memory_circuit(layout3, 3, "Z", NOISY)


@pytest.fixture(scope="session")
def circuit3x(layout3):
    return build_memory_circuit(layout3, 3, "X", NOISY)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypflow.mesh import mesh_generate

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def coarse_mesh():
    return mesh_generate(1.5, 0.25)


@pytest.fixture(scope="session")
def mesh_r2():
    return mesh_generate(2.0, 0.2)


@pytest.fixture(scope="session")
def mesh_r3():
    return mesh_generate(3.0, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from cpdf_rrt.geometry import Environment, OrientedRect, Pose
from cpdf_rrt.tasks import builtin_task

ROBOT = (0.39, 0.195)


@pytest.fixture(scope="session")
def task1():
    return builtin_task(1)


@pytest.fixture(scope="session")
def task5():
    return builtin_task(5)


@pytest.fixture
def empty_env():
    return Environment([0.0, 0.0, -np.pi], [1.8, 1.125, np.pi])


@pytest.fixture
def block_env():
    obstacle = OrientedRect(Pose(0.9, 0.5), 0.3, 0.3)
    return Environment([0.0, 0.0, -np.pi], [1.8, 1.125, np.pi], (obstacle,))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)

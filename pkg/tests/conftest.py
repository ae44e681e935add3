import pytest

from waves import fixtures
from waves.nonlinearity import Nonlinearity


@pytest.fixture(scope="session")
def figure_front():
    return fixtures.figure_front()


@pytest.fixture(scope="session")
def figure_classes():
    return fixtures.figure_classes()


@pytest.fixture(scope="session")
def figure_composites():
    return fixtures.figure_composites()


@pytest.fixture(scope="session")
def breaking_front():
    return fixtures.breaking_front()


@pytest.fixture(scope="session")
def burgers_front():
    return fixtures.burgers_front()


@pytest.fixture(scope="session")
def family_wave():
    return fixtures.family_wave()


def reflect_flux(nl):
    """The pair (-f, g): mirror image of a wave under x -> -x."""
    return Nonlinearity([lambda u, d=d: -d(u) for d in nl.f_derivs], nl.g_derivs, nl.domain,
                        nl.name + "-reflected")


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

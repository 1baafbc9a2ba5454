import pytest

from ctlab.families import punctured_torus, symmetric_schottky


@pytest.fixture(scope="session")
def schottky():
    return symmetric_schottky(3.0)


@pytest.fixture(scope="session")
def torus():
    return punctured_torus(3, 3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

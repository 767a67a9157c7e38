import numpy as np
import pytest

from graphcumulants.atlas import get_atlas


@pytest.fixture(scope="session")
def atlas():
    return get_atlas()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_REPORT: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Collects one summary line per acceptance criterion."""
    def add(line: str):
        print(line)
        _REPORT.append(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)

import pytest

from rocftp.rng import new_stream
from rocftp.targets import CATALOG


@pytest.fixture
def case1():
    return CATALOG["case1"].target


@pytest.fixture
def stream():
    return new_stream(2024, 0)


_ACCEPTANCE_LINES: list[str] = []


def record_criterion(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from fracheat.experiments import profile_for
from fracheat.kernel import FracParams


@pytest.fixture(scope="session")
def profile():
    """profile(n, s) -> built KernelProfile, cached for the whole session."""
    return lambda n, s: profile_for(n, s)


@pytest.fixture
def params():
    return lambda n, s: FracParams(n, s)


ACCEPTANCE_LINES: dict = {}


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

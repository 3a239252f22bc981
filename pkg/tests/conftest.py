import numpy as np
import pytest

from helmsweep.verification import make_setup


@pytest.fixture(scope="session")
def setups():
    """Small direct-solved configurations shared across test modules, keyed by (n, alpha, setting, outer)."""
    cache = {}

    def get(n=16, alpha=0.1, setting="guide", outer="robin", seed=0):
        key = (n, alpha, setting, outer, seed)
        if key not in cache:
            cache[key] = make_setup(n, alpha, setting, outer, seed)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for the one-line verdict of each acceptance criterion."""

    def record(number: int, passed: bool, summary: str, details=()):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {summary}"
        ACCEPTANCE_LINES.append(line)
        ACCEPTANCE_LINES.extend(f"    {detail}" for detail in details)
        print(line)
        for detail in details:
            print(f"    {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

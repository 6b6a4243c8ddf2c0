import numpy as np
import pytest

from nptopt.fock import prepare_subtracted_tmsv, prepare_tmsv, prepare_two_mode_cat


@pytest.fixture(scope="session")
def tmsv1():
    return prepare_tmsv(1.0)


@pytest.fixture(scope="session")
def sub11():
    return prepare_subtracted_tmsv(1.0, 1, 1)


@pytest.fixture(scope="session")
def cat1():
    return prepare_two_mode_cat(1.0)


@pytest.fixture(scope="session")
def example_states(tmsv1, sub11, cat1):
    return {"tmsv": tmsv1, "subtracted": sub11, "cat": cat1}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

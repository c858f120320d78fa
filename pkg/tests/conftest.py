import numpy as np
import pytest

_CRITERIA = []


@pytest.fixture
def seeded():
    """Seeded Gaussian matrix factory independent of the package streams."""

    def make(shape, seed=0):
        return np.random.default_rng(seed).standard_normal(shape)

    return make


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)

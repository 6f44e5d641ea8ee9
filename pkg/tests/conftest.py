import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def far_row_fixture(seed=0, d=5):
    """99 rows with pairwise distances < 0.5 and one row 10^3 away (row 50)."""
    r = np.random.default_rng(seed)
    core = r.normal(0.0, 0.05, size=(99, d))
    far = np.zeros(d)
    far[0] = 1e3
    return np.vstack([core[:50], far, core[50:]])


# one summary line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

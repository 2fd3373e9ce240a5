import numpy as np
import pytest

# Lines recorded by the acceptance tests, echoed once at the end of the run so
# that `pytest -v` output always shows the per-criterion verdicts.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20260916)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20111)


def pytest_terminal_summary(terminalreporter):
    from .acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)

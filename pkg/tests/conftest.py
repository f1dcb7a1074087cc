"""Shared fixtures: one dense-oracle-sized model, one mid-size scan, and the
full desk-scale instance the acceptance gate runs on. All session scoped so
the desk model (169 frames) is built once."""

import pytest

from ptychokit.verify import desk_model, tiny_model

# Filled by tests/test_acceptance.py, echoed after the run so the per-criterion
# pass/fail lines survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny():
    """(model, truth, amps) at n=8, m=4, K=4; small enough for dense matrices."""
    return tiny_model()


@pytest.fixture(scope="session")
def mini():
    """(model, truth, amps) at n=32, m=8, lattice spacing 4, designed lens."""
    return desk_model()


@pytest.fixture(scope="session")
def desk():
    """(model, truth, amps) at n=64, m=16, spacing 4: the acceptance scale."""
    return desk_model(n=64, m=16, spacing=4)

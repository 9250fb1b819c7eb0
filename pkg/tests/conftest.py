import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from irfmc.distributions import get_target  # noqa: E402


@pytest.fixture(scope="session")
def gaussian():
    return get_target("gaussian:0:1")


@pytest.fixture(scope="session")
def beta22():
    return get_target("beta:2:2")


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)

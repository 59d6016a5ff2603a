import warnings

import pytest

from relaybuf.params import derive_constants, default_scenario


@pytest.fixture
def default_params():
    return default_scenario(25.0)


@pytest.fixture
def default_constants(default_params):
    return derive_constants(default_params)


def pytest_configure(config):
    warnings.filterwarnings("error", category=RuntimeWarning, module="relaybuf")


# One line per acceptance criterion, printed after the test session.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

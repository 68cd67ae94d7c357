import sys
import warnings

import numpy as np
import pytest

from sfpdl.cols import SigmaVFloored


@pytest.fixture(autouse=True)
def _quiet_flooring():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaVFloored)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

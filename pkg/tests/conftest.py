import time

import numpy as np
import pytest


def pytest_configure(config):
    config._suite_started = time.monotonic()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.monotonic() - config._suite_started
    terminalreporter.write_line(f"suite wall-clock: {elapsed:.1f} s")


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)

import math

import numpy as np
import pytest

import specenhance as se

_ACCEPTANCE = []


@pytest.fixture
def grid():
    return se.Grid(4096, 64.0)


@pytest.fixture
def small_grid():
    return se.Grid(1024, 64.0)


@pytest.fixture
def unit_line():
    return se.LineSpectrum((0.0,), (1.0,))


@pytest.fixture
def gaussian_line(grid, unit_line):
    return se.broaden(unit_line, se.KernelSpec.gaussian(), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_fwhm(sd=1.0):
    return 2 * math.sqrt(2 * math.log(2)) * sd


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")

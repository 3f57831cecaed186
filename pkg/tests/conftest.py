import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mcfsource.devices import BASIS_NAMES, basis
from mcfsource.qcore import born_joint_distribution
from mcfsource.source import ideal_state, werner_state

LAB_VISIBILITY = 0.775


def exact_tables(state):
    out = {}
    for name in BASIS_NAMES:
        u = basis(name).unitary
        out[name] = born_joint_distribution(state, u, u)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20201105)


@pytest.fixture(scope="session")
def ideal_tables():
    return exact_tables(ideal_state())


@pytest.fixture(scope="session")
def werner_tables():
    return exact_tables(werner_state(LAB_VISIBILITY))

# about 1000 coincidences per basis gives sigma_F near 0.007, the laboratory scale
LAB_SCALE_COUNTS = 1000

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

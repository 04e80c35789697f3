import os
import sys

import numpy as np
import pytest

HERE = os.path.dirname(__file__)


def read_corpus():
    with open(os.path.join(HERE, "data", "molecules.smi")) as fh:
        return [line.strip() for line in fh if line.strip()]


@pytest.fixture(scope="session")
def corpus():
    return read_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

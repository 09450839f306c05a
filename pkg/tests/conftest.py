import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hsictest.grid import FunctionalSample, make_uniform_grid  # noqa: E402

DATA = Path(__file__).parent / "data"

# filled by test_acceptance.py, reported at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid11():
    return make_uniform_grid(11)


def random_sample(rng, n, m=7, kind="curve"):
    if kind == "vector":
        return FunctionalSample.from_vectors(rng.normal(size=(n, m)))
    return FunctionalSample(rng.normal(size=(n, m)).cumsum(axis=1), make_uniform_grid(m))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

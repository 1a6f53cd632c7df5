import numpy as np
import pytest

from topocorr.anyon_model import fibonacci, ising, zn
from topocorr.fusion_space import bipartite_basis

PHI = (1 + 5**0.5) / 2


@pytest.fixture(scope="session")
def fib():
    return fibonacci()


@pytest.fixture(scope="session")
def isg():
    return ising()


@pytest.fixture(scope="session")
def z2():
    return zn(2)


@pytest.fixture(scope="session")
def fib_basis(fib):
    return bipartite_basis(fib, ["τ", "τ"], ["τ", "τ"])


@pytest.fixture(scope="session")
def ising_basis(isg):
    return bipartite_basis(isg, ["σ", "σ"], ["σ", "σ"])


@pytest.fixture(scope="session")
def fib_big_basis(fib):
    """Sectors of dimension 2 on the A side."""
    return bipartite_basis(fib, ["τ", "τ", "τ"], ["τ", "τ"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

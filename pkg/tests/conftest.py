import numpy as np
import pytest

from iopctrl.tf import RationalFunction, RationalMatrix

ACCEPTANCE_LINES = []


def stable_root(rng, domain):
    if domain == "z":
        return rng.uniform(-0.8, 0.8)
    return rng.uniform(-4.0, -0.3)


def random_stable_rf(rng, domain, order=1, strictly=False):
    """Real-pole stable rational function of the given order."""
    poles = [stable_root(rng, domain) for _ in range(order)]
    nz = order - 1 if strictly else order
    zeros = rng.uniform(-2, 2, size=nz)
    return RationalFunction.from_zpk(rng.uniform(0.3, 2.0) * rng.choice([-1, 1]), zeros, poles)


def random_stable_matrix(rng, rows, cols, domain, order=1, strictly=False):
    return RationalMatrix(
        [[random_stable_rf(rng, domain, order, strictly) for _ in range(cols)] for _ in range(rows)], domain
    )


def random_fir(rng, rows, cols, L=2, domain="z"):
    """``sum_i Q[i] sigma^-i`` with sigma = z or s + 2."""
    from iopctrl.basis import expand_block

    C = rng.standard_normal((L + 1, rows, cols))
    return expand_block(C, domain, None if domain == "z" else 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

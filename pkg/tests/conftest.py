import numpy as np
import pytest

from fredholm.operators import CoeffVector, SeparableKernel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_vector(rng, basis, real=False):
    c = rng.standard_normal(basis.dim)
    if not real:
        c = c + 1j * rng.standard_normal(basis.dim)
    return CoeffVector(basis, c)


def kernel_st(scale=1.0):
    return SeparableKernel([(lambda s: scale * s, lambda t: t)])


# acceptance lines, printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])

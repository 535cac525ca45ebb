import pytest

from mixhit.kernels.core import finite_kernel, uniform
from mixhit.sampling.rng import make_rng


@pytest.fixture
def flip():
    return finite_kernel([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def lazy_flip():
    return finite_kernel([[0.5, 0.5], [0.5, 0.5]])


@pytest.fixture
def birth_death():
    return finite_kernel([[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]])


@pytest.fixture
def rotation():
    return finite_kernel([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


@pytest.fixture
def path3():
    return finite_kernel([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])


@pytest.fixture
def half():
    return uniform(2)


@pytest.fixture
def rng():
    return make_rng(12345)

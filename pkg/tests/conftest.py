import numpy as np
import pytest

from platecontact.mesh import build_mesh
from platecontact.plate import MaterialParams


@pytest.fixture
def params():
    return MaterialParams(E=100.0, nu=0.5, t=0.1)


@pytest.fixture
def unit_mesh():
    def make(n, ny=None):
        return build_mesh((0.0, 0.0), (1.0, 1.0), n, n if ny is None else ny)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

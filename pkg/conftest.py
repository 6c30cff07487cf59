import pathlib
import sys

import numpy as np
import pytest
from hypothesis import settings

ROOT = pathlib.Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from cxhyp.geodesic_normal_form import decompose, normal_form_matrix  # noqa: E402
from cxhyp.group_enum import octagon_group  # noqa: E402

settings.register_profile("cxhyp", max_examples=100, deadline=None)
settings.load_profile("cxhyp")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical experiments")


@pytest.fixture
def gamma0_l2():
    """Normal form with lambda = 2, n = 1."""
    return normal_form_matrix(2.0, 1)


@pytest.fixture
def dec_l2(gamma0_l2):
    return decompose(gamma0_l2)


@pytest.fixture(scope="session")
def octagon():
    return octagon_group()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

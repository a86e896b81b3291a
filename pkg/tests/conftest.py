import pytest

from wnv_nonlocal import ModelParams, make_kernel

UNIT = dict(a1=1.0, a2=1.0, e1=1.0, e2=1.0, b1=1.0, b2=1.0, k=1.0, d1=1.0, d2=1.0,
            omega=1.0, delta=0.5, mu1=1.0, mu2=1.0, h0=1.0)


def make_params(**changes):
    return ModelParams.from_mapping({**UNIT, **changes})


@pytest.fixture
def params():
    return make_params


@pytest.fixture
def tent():
    return make_kernel("tent", radius=1.0)

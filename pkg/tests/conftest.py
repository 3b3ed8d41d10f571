import numpy as np
import pytest
from hypothesis import strategies as st

from sinkflow import NetworkSpec

WORKED = dict(b=[1, 1], d=[1, 2], g=[1, 10])
LITTLE_MESSAGES = dict(b=[1, 1], d=[1, 2], g=[10, 1])
LITTLE_BATTERY = dict(b=[1, 0.1, 1], d=[1, 2, 3])


@pytest.fixture
def worked():
    return NetworkSpec(**WORKED)


@pytest.fixture
def little_messages():
    return NetworkSpec(**LITTLE_MESSAGES)


@st.composite
def specs(draw, min_n=1, max_n=8, b_range=(0.05, 5.0), d_max=10.0, g_max=20.0, sparse=True):
    n = draw(st.integers(min_n, max_n))
    floats = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    b = draw(st.lists(floats(*b_range), min_size=n, max_size=n))
    d = sorted(draw(st.lists(floats(1.0, d_max), min_size=n, max_size=n)))
    g_val = floats(0.0, g_max)
    if sparse:
        g_val = st.one_of(st.just(0.0), g_val)
    g = draw(st.lists(g_val, min_size=n, max_size=n))
    return NetworkSpec(b, d, g)


def random_spec(rng, n, b_range=(0.05, 5.0), log_b=False, sparse=0.0):
    if log_b:
        b = np.exp(rng.uniform(np.log(b_range[0]), np.log(b_range[1]), n))
    else:
        b = rng.uniform(*b_range, n)
    d = np.sort(rng.uniform(1, 10, n))
    g = rng.uniform(0, 20, n)
    if sparse:
        g = g * (rng.random(n) >= sparse)
    return NetworkSpec(b, d, g)

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("ci")


def random_event_arrays(rng, geom, n, t_max=2.0):
    """Sorted random event stream as (t, x, y, sigma) arrays."""
    t = np.sort(rng.uniform(0.0, t_max, n))
    x = rng.integers(0, geom.width, n)
    y = rng.integers(0, geom.height, n)
    s = rng.choice(np.array([-1, 1], dtype=np.int64), n)
    return t, x, y, s


def ulp_diff(a, b):
    """Elementwise |a-b| in units of the larger operand's ulp."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sp = np.spacing(np.maximum(np.abs(a), np.abs(b)))
    d = np.abs(a - b)
    return np.where(d == 0.0, 0.0, d / sp)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

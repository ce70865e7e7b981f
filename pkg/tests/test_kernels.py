import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evconv.events import Event, SensorGeometry
from evconv.kernels import (
    KERNEL_NAMES,
    Kernel,
    convolve_dense,
    expand_event,
    load_kernel,
    make_kernel,
)


def scatter(entries, geom):
    img = np.zeros((geom.height, geom.width))
    for (x, y), inc in entries:
        img[y, x] += inc
    return img


def dense_expand_oracle(e, kernel, c, geom):
    """Brute-force route: convolve a Dirac image with the same border rule."""
    delta = np.zeros((geom.height, geom.width))
    delta[e.y, e.x] = e.sigma * c
    return convolve_dense(delta, kernel)


def test_catalog_values():
    assert make_kernel("identity").coeffs.tolist() == [[1.0]]
    assert make_kernel("gaussian3").coeffs.sum() == pytest.approx(1.0, abs=1e-15)
    assert make_kernel("sobel_x").coeffs.sum() == 0.0
    assert np.array_equal(make_kernel("sobel_y").coeffs, make_kernel("sobel_x").coeffs.T)
    assert make_kernel("laplacian").coeffs[1, 1] == -4.0
    assert np.allclose(make_kernel("box3").coeffs, 1.0 / 9.0)


def test_unknown_kernel_lists_names():
    with pytest.raises(ValueError) as err:
        make_kernel("bogus")
    for name in KERNEL_NAMES:
        assert name in str(err.value)


def test_kernel_invariants():
    with pytest.raises(ValueError):
        Kernel(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Kernel(np.ones((2, 3)))
    with pytest.raises(ValueError):
        Kernel(np.array([[np.inf]]))


def test_expand_identity():
    geom = SensorGeometry(32, 32)
    ce = expand_event(Event(1.0, 10, 20, 1), make_kernel("identity"), 0.1, geom)
    assert ce.entries == (((10, 20), 0.1),)


def test_expand_sobel_x_interior_frozen():
    # expected entries computed with dense_expand_oracle (frozen):
    # true convolution stamps the kernel as stored, so the +1/+2/+1 column
    # lands to the right of a positive event
    geom = SensorGeometry(16, 16)
    e = Event(0.0, 5, 5, 1)
    ce = expand_event(e, make_kernel("sobel_x"), 1.0, geom)
    expected = {
        (4, 4): -1.0, (6, 4): 1.0,
        (4, 5): -2.0, (6, 5): 2.0,
        (4, 6): -1.0, (6, 6): 1.0,
    }
    assert dict(ce.entries) == expected
    assert np.array_equal(scatter(ce.entries, geom), dense_expand_oracle(e, make_kernel("sobel_x"), 1.0, geom))


def test_expand_corner_truncates():
    geom = SensorGeometry(16, 16)
    ce = expand_event(Event(0.0, 0, 0, 1), make_kernel("gaussian3"), 1.0, geom)
    assert len(ce.entries) <= 4
    assert all(geom.contains(x, y) for (x, y), _ in ce.entries)


def test_expand_out_of_bounds_event():
    with pytest.raises(ValueError):
        expand_event(Event(0.0, 16, 0, 1), make_kernel("identity"), 1.0, SensorGeometry(16, 16))


@given(
    name=st.sampled_from(KERNEL_NAMES),
    x=st.integers(0, 11),
    y=st.integers(0, 9),
    sigma=st.sampled_from([-1, 1]),
)
def test_expand_matches_dense_everywhere(name, x, y, sigma):
    # consistency must be exact, borders included
    geom = SensorGeometry(12, 10)
    e = Event(0.5, x, y, sigma)
    kernel = make_kernel(name)
    ce = expand_event(e, kernel, 0.1, geom)
    assert np.array_equal(scatter(ce.entries, geom), dense_expand_oracle(e, kernel, 0.1, geom))
    assert all(inc != 0.0 for _, inc in ce.entries)


def test_expand_increment_sum_interior():
    geom = SensorGeometry(16, 16)
    for name in KERNEL_NAMES:
        kernel = make_kernel(name)
        ce = expand_event(Event(0.0, 8, 8, -1), kernel, 0.25, geom)
        assert sum(inc for _, inc in ce.entries) == pytest.approx(-0.25 * kernel.coeffs.sum(), abs=1e-15)


def test_convolve_identity_is_noop(rng):
    img = rng.normal(size=(9, 7))
    assert np.array_equal(convolve_dense(img, make_kernel("identity")), img)


def test_convolve_impulse_response():
    img = np.zeros((16, 16))
    img[8, 8] = 1.0
    out = convolve_dense(img, make_kernel("gaussian3"))
    assert np.array_equal(out[7:10, 7:10], make_kernel("gaussian3").coeffs)
    out[7:10, 7:10] = 0.0
    assert not out.any()


def test_convolve_linearity(rng):
    a, b = 1.7, -0.3
    A = rng.normal(size=(8, 8))
    B = rng.normal(size=(8, 8))
    k = make_kernel("laplacian")
    lhs = convolve_dense(a * A + b * B, k)
    rhs = a * convolve_dense(A, k) + b * convolve_dense(B, k)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_sobel_transpose_identity(rng):
    # same addends, different summation order under transpose
    img = rng.normal(size=(10, 12))
    lhs = convolve_dense(img, make_kernel("sobel_x"))
    rhs = convolve_dense(img.T, make_kernel("sobel_y")).T
    assert np.abs(lhs - rhs).max() <= 1e-13


def test_load_kernel_text_format():
    text = "3 1\n0.5 -1.0 0.5\n"
    k = load_kernel(io.StringIO(text))
    assert k.coeffs.tolist() == [[0.5, -1.0, 0.5]]
    assert (k.radius_x, k.radius_y) == (1, 0)


def test_load_kernel_rejects_even():
    with pytest.raises(ValueError):
        load_kernel(io.StringIO("2 1\n1 1\n"))

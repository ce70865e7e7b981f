import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_event_arrays
from evconv.events import Event, SensorGeometry, arrays_to_events
from evconv.filter import (
    FilterBank,
    FilterParams,
    FilterState,
    closed_form_oracle,
    process_stream,
)
from evconv.kernels import expand_event, make_kernel

GEOM = SensorGeometry(32, 32)
LN2 = math.log(2.0)


def fresh(kernel="identity", alpha=LN2, c=0.1, strict=True, geom=GEOM):
    return FilterState(geom, make_kernel(kernel), FilterParams(alpha=alpha, c=c), strict=strict)


def euler_reference(arrays, kernel, params, geom, t_end, dt=1e-6):
    """Third implementation: explicit-Euler integration of the filter ODE
    with impulses injected at the step containing each event."""
    t, x, y, s = arrays
    img = np.zeros((geom.height, geom.width))
    n_steps = int(round(t_end / dt))
    idx = 0
    n = t.shape[0]
    for step in range(n_steps):
        t_next = (step + 1) * dt
        img *= 1.0 - params.alpha * dt
        while idx < n and t[idx] <= t_next:
            e = Event(float(t[idx]), int(x[idx]), int(y[idx]), int(s[idx]))
            for (px, py), inc in expand_event(e, kernel, params.c, geom).entries:
                img[py, px] += inc
            idx += 1
    return img


# --- decay_pixel ---

def test_decay_halving():
    st_ = fresh()
    st_.values[5, 5] = 1.0
    assert st_.decay_pixel((5, 5), 1.0) == pytest.approx(0.5, rel=1e-15)


def test_decay_zero_elapsed_identity():
    st_ = fresh()
    st_.values[5, 5] = 0.7
    st_.last_t[5, 5] = 2.0
    assert st_.decay_pixel((5, 5), 2.0) == 0.7


def test_decay_of_zero_is_zero():
    st_ = fresh()
    assert st_.decay_pixel((3, 3), 100.0) == 0.0


def test_decay_strict_order_error():
    st_ = fresh()
    st_.last_t[1, 1] = 1.0
    with pytest.raises(ValueError, match="precedes"):
        st_.decay_pixel((1, 1), 0.5)
    lenient = fresh(strict=False)
    lenient.values[1, 1] = 0.3
    lenient.last_t[1, 1] = 1.0
    assert lenient.decay_pixel((1, 1), 0.5) == 0.3


# --- process_event ---

def test_process_first_event():
    st_ = fresh()
    st_.process_event(Event(1.0, 4, 6, 1))
    assert st_.values[6, 4] == 0.1
    assert st_.last_t[6, 4] == 1.0


def test_process_two_events_compose():
    st_ = fresh()
    st_.process_event(Event(1.0, 4, 6, 1))
    st_.process_event(Event(2.0, 4, 6, 1))
    assert st_.values[6, 4] == pytest.approx(0.15, rel=1e-15)


def test_process_untouched_pixels_stay_zero():
    st_ = fresh("gaussian3")
    st_.process_event(Event(1.0, 10, 10, 1))
    touched = np.zeros_like(st_.values, dtype=bool)
    touched[9:12, 9:12] = True
    assert not st_.values[~touched].any()
    assert not st_.last_t[~touched].any()


def test_process_strict_regression_error():
    st_ = fresh()
    st_.process_event(Event(1.0, 4, 6, 1))
    with pytest.raises(ValueError, match="event 0"):
        st_.process_event(Event(0.5, 4, 6, 1))


def test_process_lenient_clamps_and_counts():
    st_ = fresh(strict=False)
    st_.process_event(Event(1.0, 4, 6, 1))
    st_.process_event(Event(0.5, 4, 6, 1))
    assert st_.values[6, 4] == pytest.approx(0.2)
    assert st_.last_t[6, 4] == 0.5
    assert st_.stats.clamped == 1


def test_process_out_of_bounds_batch_index():
    st_ = fresh()
    with pytest.raises(ValueError, match="event 1"):
        st_.process_events(([0.1, 0.2], [1, 40], [1, 1], [1, 1]))


def test_stats_event_count(rng):
    arrays = random_event_arrays(rng, GEOM, 500)
    st_ = fresh("sobel_x")
    st_.process_events(arrays)
    assert st_.stats.events == 500


# --- snapshot ---

def test_snapshot_fresh_all_zero():
    assert not fresh().snapshot(3.0).any()


def test_snapshot_pure_and_repeatable(rng):
    arrays = random_event_arrays(rng, GEOM, 200)
    st_ = fresh("gaussian3")
    st_.process_events(arrays)
    tq = float(arrays[0][-1]) + 0.5
    a = st_.snapshot(tq)
    b = st_.snapshot(tq)
    assert np.array_equal(a, b)
    assert st_.stats.events == 200


def test_snapshot_decay_law_between_events(rng):
    arrays = random_event_arrays(rng, GEOM, 100)
    st_ = fresh(alpha=2.0)
    st_.process_events(arrays)
    t1 = float(arrays[0][-1]) + 0.25
    t2 = t1 + 0.5
    np.testing.assert_allclose(st_.snapshot(t2), math.exp(-2.0 * 0.5) * st_.snapshot(t1), rtol=1e-14)


def test_snapshot_strict_names_pixel():
    st_ = fresh()
    st_.process_event(Event(1.0, 4, 6, 1))
    with pytest.raises(ValueError, match=r"\(4, 6\)"):
        st_.snapshot(0.5)


# --- closed-form oracle ---

def test_oracle_empty_is_zero():
    out = closed_form_oracle([], make_kernel("identity"), FilterParams(1.0, 0.1), GEOM, 1.0)
    assert not out.any()


def test_oracle_single_event_closed_form():
    p = FilterParams(alpha=2.0, c=0.1)
    out = closed_form_oracle([Event(1.0, 3, 4, -1)], make_kernel("identity"), p, GEOM, 2.5)
    assert out[4, 3] == pytest.approx(-0.1 * math.exp(-2.0 * 1.5), rel=1e-15)
    assert np.count_nonzero(out) == 1


def test_oracle_rejects_future_events():
    with pytest.raises(ValueError):
        closed_form_oracle([Event(2.0, 1, 1, 1)], make_kernel("identity"), FilterParams(1.0, 0.1), GEOM, 1.0)


def test_incremental_matches_oracle(rng):
    arrays = random_event_arrays(rng, GEOM, 1000)
    for name in ("identity", "sobel_x"):
        p = FilterParams(alpha=2 * math.pi, c=0.1)
        st_ = fresh(name, alpha=p.alpha)
        st_.process_events(arrays)
        tq = float(arrays[0][-1]) + 0.01
        snap = st_.snapshot(tq)
        orc = closed_form_oracle(arrays, make_kernel(name), p, GEOM, tq)
        assert np.abs(snap - orc).max() <= 1e-9 * (1.0 + np.abs(orc).max())


def test_oracle_cross_checked_against_euler(rng):
    # fine-step explicit Euler is the independent third route
    geom = SensorGeometry(8, 8)
    n = 12
    t = np.sort(rng.uniform(0.0005, 0.009, n))
    x = rng.integers(0, 8, n)
    y = rng.integers(0, 8, n)
    s = rng.choice(np.array([-1, 1]), n)
    arrays = (t, x, y, s)
    kernel = make_kernel("sobel_x")
    p = FilterParams(alpha=2 * math.pi, c=0.1)
    t_end = 0.01
    ref = euler_reference(arrays, kernel, p, geom, t_end)
    orc = closed_form_oracle(arrays, kernel, p, geom, t_end)
    scale = max(np.abs(ref).max(), 1e-12)
    assert np.abs(ref - orc).max() / scale <= 1e-3


# --- invariants ---

def test_superposition(rng):
    a1 = random_event_arrays(rng, GEOM, 300)
    a2 = random_event_arrays(rng, GEOM, 300)
    p = FilterParams(alpha=3.0, c=0.1)
    tq = 2.5

    def state_for(arrays):
        st_ = fresh("laplacian", alpha=3.0, strict=False)
        st_.process_events(arrays)
        return st_.snapshot(tq)

    merged = tuple(np.concatenate(pair) for pair in zip(a1, a2))
    order = np.argsort(merged[0], kind="stable")
    merged = tuple(arr[order] for arr in merged)
    lhs = state_for(merged)
    rhs = state_for(a1) + state_for(a2)
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1.0 + np.abs(rhs).max())


def test_polarity_antisymmetry(rng):
    arrays = random_event_arrays(rng, GEOM, 400)
    flipped = (arrays[0], arrays[1], arrays[2], -arrays[3])
    st_a = fresh("gaussian3")
    st_b = fresh("gaussian3")
    st_a.process_events(arrays)
    st_b.process_events(flipped)
    tq = float(arrays[0][-1])
    assert np.array_equal(st_a.snapshot(tq), -st_b.snapshot(tq))


@given(n=st.integers(1, 60))
@settings(max_examples=20)
def test_commutation_with_dense_convolution(n):
    from evconv.kernels import convolve_dense

    rng = np.random.default_rng(n)
    arrays = random_event_arrays(rng, GEOM, n)
    p = FilterParams(alpha=2 * math.pi, c=0.1)
    ident = fresh("identity", alpha=p.alpha)
    chan = fresh("laplacian", alpha=p.alpha)
    ident.process_events(arrays)
    chan.process_events(arrays)
    tq = float(arrays[0][-1])
    lhs = chan.snapshot(tq)
    rhs = convolve_dense(ident.snapshot(tq), make_kernel("laplacian"))
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1.0 + np.abs(rhs).max())


# --- filter bank / stream ---

def test_bank_requires_shared_geometry_and_c():
    a = fresh("identity")
    b = FilterState(SensorGeometry(16, 16), make_kernel("identity"), FilterParams(1.0, 0.1))
    with pytest.raises(ValueError):
        FilterBank([a, b])
    c_mismatch = FilterState(GEOM, make_kernel("identity"), FilterParams(1.0, 0.2))
    with pytest.raises(ValueError):
        FilterBank([a, c_mismatch])


def test_bank_allows_per_channel_alpha():
    a = fresh("identity", alpha=2 * math.pi)
    b = fresh("sobel_x", alpha=10.0)
    bank = FilterBank([a, b])
    bank.process_events([Event(0.5, 3, 3, 1)])
    assert a.stats.events == 1 and b.stats.events == 1


def test_stream_no_events_zero_frames():
    bank = FilterBank([fresh("identity"), fresh("sobel_y")])
    out = list(process_stream(bank, [], [1.0, 2.0]))
    assert len(out) == 2
    for ts, snaps in out:
        assert len(snaps) == 2
        assert not any(im.any() for im in snaps)


def test_stream_causality():
    bank = FilterBank([fresh("identity")])
    out = list(process_stream(bank, [Event(1.5, 3, 3, 1)], [1.0, 2.0]))
    assert not out[0][1][0].any()
    assert out[1][1][0].any()


def test_stream_inclusive_tie_rule():
    bank = FilterBank([fresh("identity")])
    out = list(process_stream(bank, [Event(1.0, 3, 3, 1)], [1.0]))
    assert out[0][1][0][3, 3] == 0.1


def test_stream_rejects_unsorted_samples():
    bank = FilterBank([fresh("identity")])
    with pytest.raises(ValueError):
        list(process_stream(bank, [], [2.0, 1.0]))


def test_stream_regression_reports_index():
    bank = FilterBank([fresh("identity")])
    events = [Event(0.2, 1, 1, 1), Event(0.1, 1, 1, 1)]
    with pytest.raises(ValueError, match="event 1"):
        list(process_stream(bank, events, [1.0]))

"""Asynchronous continuous-time high-pass filter state per kernel channel.

Each pixel holds the latest filtered value and the timestamp of its last
update.  Between events the state follows the exact solution of
dG/dt = -alpha * G (pure exponential decay); at an event the expanded
kernel increments are added.  Reads interpolate exactly to any query time
without mutating the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numba
import numpy as np

from .events import Event, SensorGeometry, events_to_arrays
from .kernels import Kernel


@dataclass(frozen=True)
class FilterParams:
    """Filter gain alpha (rad/s) and contrast threshold c (log units)."""

    alpha: float
    c: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError(f"contrast threshold must be positive and finite, got {self.c}")


@dataclass
class FilterStats:
    events: int = 0
    clamped: int = 0


_OK, _ERR_BOUNDS, _ERR_ORDER = 0, 1, 2


@numba.njit(cache=True)
def _process_core(values, last_t, t, x, y, s, dy, dx, w, alpha, c, strict, height, width):
    clamped = 0
    ntaps = dy.shape[0]
    for i in range(t.shape[0]):
        ti = t[i]
        xi = x[i]
        yi = y[i]
        if xi < 0 or xi >= width or yi < 0 or yi >= height:
            return _ERR_BOUNDS, i, clamped
        if strict:
            # validate every affected pixel before mutating anything
            for k in range(ntaps):
                yy = yi + dy[k]
                xx = xi + dx[k]
                if 0 <= yy < height and 0 <= xx < width and ti < last_t[yy, xx]:
                    return _ERR_ORDER, i, clamped
        inc = s[i] * c
        for k in range(ntaps):
            yy = yi + dy[k]
            xx = xi + dx[k]
            if 0 <= yy < height and 0 <= xx < width:
                dt = ti - last_t[yy, xx]
                if dt < 0.0:
                    dt = 0.0
                    clamped += 1
                values[yy, xx] = values[yy, xx] * math.exp(-alpha * dt) + inc * w[k]
                last_t[yy, xx] = ti
    return _OK, -1, clamped


class FilterState:
    """Per-pixel filter state for one kernel channel.

    In strict mode an event older than a pixel's last update raises; in
    lenient mode the elapsed time is clamped to zero and counted.
    """

    def __init__(
        self,
        geom: SensorGeometry,
        kernel: Kernel,
        params: FilterParams,
        strict: bool = True,
    ):
        self.geom = geom
        self.kernel = kernel
        self.params = params
        self.strict = strict
        self.values = np.zeros((geom.height, geom.width), dtype=np.float64)
        self.last_t = np.zeros((geom.height, geom.width), dtype=np.float64)
        self.stats = FilterStats()
        self._taps = kernel.taps()

    def decay_pixel(self, p: tuple[int, int], t: float) -> float:
        """Value at pixel p interpolated to time t; does not mutate."""
        x, y = p
        lt = self.last_t[y, x]
        dt = t - lt
        if dt < 0.0:
            if self.strict:
                raise ValueError(f"query time {t!r} precedes last update {lt!r} at pixel ({x}, {y})")
            dt = 0.0
        return float(self.values[y, x] * math.exp(-self.params.alpha * dt))

    def process_event(self, e: Event) -> None:
        self.process_events(([e.t], [e.x], [e.y], [e.sigma]))

    def process_events(self, events) -> None:
        """Apply a batch of events in order (list of Event or array 4-tuple)."""
        t, x, y, s = events_to_arrays(events)
        status, idx, clamped = _process_core(
            self.values,
            self.last_t,
            t,
            x,
            y,
            s,
            self._taps[0],
            self._taps[1],
            self._taps[2],
            self.params.alpha,
            self.params.c,
            self.strict,
            self.geom.height,
            self.geom.width,
        )
        self.stats.clamped += clamped
        if status == _ERR_BOUNDS:
            self.stats.events += idx
            raise ValueError(
                f"event {idx}: pixel ({x[idx]}, {y[idx]}) outside "
                f"{self.geom.width}x{self.geom.height} sensor"
            )
        if status == _ERR_ORDER:
            self.stats.events += idx
            raise ValueError(
                f"event {idx}: time {t[idx]!r} precedes the last update of an affected pixel"
            )
        self.stats.events += t.shape[0]

    def snapshot(self, t_query: float) -> np.ndarray:
        """Dense read-out of the state at t_query; pure (state untouched)."""
        dt = t_query - self.last_t
        if self.strict:
            if np.any(dt < 0.0):
                j = int(np.argmin(dt))
                y, x = divmod(j, self.geom.width)
                raise ValueError(
                    f"query time {t_query!r} precedes last update "
                    f"{self.last_t[y, x]!r} at pixel ({x}, {y})"
                )
        else:
            dt = np.maximum(dt, 0.0)
        return np.exp(-self.params.alpha * dt) * self.values


def closed_form_oracle(
    events,
    kernel: Kernel,
    params: FilterParams,
    geom: SensorGeometry,
    t_query: float,
) -> np.ndarray:
    """Reference state by direct superposition over all events.

    out(p) = sum_i sigma_i * c * K(p - p_i) * exp(-alpha (t_query - t_i))
    over events with t_i <= t_query.  No incremental state is kept; this
    is the independent check for the event-driven engine.
    """
    t, x, y, s = events_to_arrays(events)
    if t.shape[0] and float(np.max(t)) > t_query:
        raise ValueError("t_query must be at or after the last event")
    out = np.zeros((geom.height, geom.width), dtype=np.float64)
    if t.shape[0] == 0:
        return out
    weights = s * params.c * np.exp(-params.alpha * (t_query - t))
    dy, dx, w = kernel.taps()
    for k in range(dy.shape[0]):
        yy = y + dy[k]
        xx = x + dx[k]
        m = (yy >= 0) & (yy < geom.height) & (xx >= 0) & (xx < geom.width)
        np.add.at(out, (yy[m], xx[m]), weights[m] * w[k])
    return out


@dataclass
class FilterBank:
    """Parallel filter channels over one sensor, one contrast threshold."""

    channels: list[FilterState] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.channels:
            raise ValueError("filter bank needs at least one channel")
        geom = self.channels[0].geom
        c = self.channels[0].params.c
        for ch in self.channels[1:]:
            if ch.geom != geom:
                raise ValueError("all channels must share one sensor geometry")
            if ch.params.c != c:
                raise ValueError("all channels must share one contrast threshold")

    @property
    def geom(self) -> SensorGeometry:
        return self.channels[0].geom

    def process_events(self, events) -> None:
        arrays = events_to_arrays(events)
        for ch in self.channels:
            ch.process_events(arrays)


def process_stream(
    bank: FilterBank,
    events,
    sample_times: Sequence[float],
) -> Iterator[tuple[float, list[np.ndarray]]]:
    """Merge events and sample times; emit per-channel snapshots.

    Events with t_i <= sample time are included in that sample.  Sample
    times must be sorted ascending; events must be time-ordered when the
    channels are strict.
    """
    samples = np.asarray(sample_times, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("sample_times must be a 1D sequence")
    if np.any(np.diff(samples) < 0):
        raise ValueError("sample_times must be sorted ascending")
    t, x, y, s = events_to_arrays(events)
    if t.shape[0] and np.any(np.diff(t) < 0):
        if any(ch.strict for ch in bank.channels):
            j = int(np.argmax(np.diff(t) < 0)) + 1
            raise ValueError(f"event {j}: timestamp regression in input stream")
    done = 0
    for ts in samples:
        upto = int(np.searchsorted(t, ts, side="right"))
        if upto > done:
            chunk = (t[done:upto], x[done:upto], y[done:upto], s[done:upto])
            bank.process_events(chunk)
            done = upto
        yield float(ts), [ch.snapshot(float(ts)) for ch in bank.channels]
    if done < t.shape[0]:
        bank.process_events((t[done:], x[done:], y[done:], s[done:]))

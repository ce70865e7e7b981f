"""Ground-truth test-data factory: frames in, events out.

Frames are linear-intensity images at strictly increasing times.  Between
frames the log intensity is interpolated linearly in time; every crossing
of the per-pixel reference level by +-c emits an event at the analytic
crossing time and moves the reference by exactly +-c (quantized reset).
The generator is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .events import Event, SensorGeometry, arrays_to_events


@dataclass(frozen=True)
class FrameSequence:
    """Linear-intensity frames (n, height, width) at times (n,)."""

    times: np.ndarray
    frames: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        frames = np.asarray(self.frames, dtype=np.float64)
        if times.ndim != 1 or frames.ndim != 3 or frames.shape[0] != times.shape[0]:
            raise ValueError("need times (n,) matching frames (n, h, w)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("frame timestamps must be strictly increasing")
        if not np.all(frames > 0.0):
            raise ValueError("intensities must be > 0 (log must be defined)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", frames)

    @property
    def geom(self) -> SensorGeometry:
        return SensorGeometry(width=self.frames.shape[2], height=self.frames.shape[1])


def generate_event_arrays(seq: FrameSequence, c: float):
    """Array-valued generator core: returns (t, x, y, sigma) sorted by
    (t, y, x, sigma)."""
    if not c > 0.0:
        raise ValueError(f"contrast threshold must be > 0, got {c}")
    if seq.times.shape[0] < 2:
        raise ValueError("need at least 2 frames")
    log_frames = np.log(seq.frames)
    n, h, w = log_frames.shape
    yy, xx = np.mgrid[0:h, 0:w]
    ref = log_frames[0].copy()
    ts_parts, xs_parts, ys_parts, ss_parts = [], [], [], []
    for k in range(n - 1):
        la, lb = log_frames[k], log_frames[k + 1]
        ta, tb = seq.times[k], seq.times[k + 1]
        d = lb - ref
        count = np.floor(np.abs(d) / c).astype(np.int64)
        sig = np.where(d >= 0.0, 1, -1).astype(np.int64)
        if not count.any():
            continue
        slope = (lb - la) / (tb - ta)
        for j in range(1, int(count.max()) + 1):
            m = count >= j
            level = ref[m] + j * c * sig[m]
            sl = slope[m]
            with np.errstate(divide="ignore", invalid="ignore"):
                tj = ta + (level - la[m]) / sl
            # level already met at the interval start when the slope is 0;
            # clamping also absorbs last-ulp overshoot of the interval end
            tj = np.where(sl == 0.0, ta, tj)
            tj = np.clip(tj, ta, tb)
            ts_parts.append(tj)
            xs_parts.append(xx[m])
            ys_parts.append(yy[m])
            ss_parts.append(sig[m])
        ref = ref + count * sig * c
    if not ts_parts:
        z = np.empty(0, dtype=np.int64)
        return np.empty(0, dtype=np.float64), z, z.copy(), z.copy()
    t = np.concatenate(ts_parts)
    x = np.concatenate(xs_parts).astype(np.int64)
    y = np.concatenate(ys_parts).astype(np.int64)
    s = np.concatenate(ss_parts)
    order = np.lexsort((s, x, y, t))
    return t[order], x[order], y[order], s[order]


def generate_events(seq: FrameSequence, c: float) -> list[Event]:
    """Events triggered by the contrast-threshold model, globally sorted
    by time with (y, x, sigma) tie order."""
    return arrays_to_events(*generate_event_arrays(seq, c))


def _ramp(geom: SensorGeometry, times: np.ndarray) -> np.ndarray:
    # log intensity linear in time: constant per-pixel event rate
    h, w = geom.height, geom.width
    yy, xx = np.mgrid[0:h, 0:w]
    rate = 0.5 + 2.5 * (xx + yy) / max(w + h - 2, 1)
    base = 0.2 * np.sin(2.0 * np.pi * xx / w) * np.cos(2.0 * np.pi * yy / h)
    return np.exp(base[None, :, :] + times[:, None, None] * rate[None, :, :])


def _checkerboard(geom: SensorGeometry, times: np.ndarray) -> np.ndarray:
    # 8-px squares with softened edges, translating 1 px per frame in x;
    # board crossings sit at x = vt + 8k, y = 8m
    h, w = geom.height, geom.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    amp = 0.5 * np.log(4.0)
    sharp = 2.0
    dt = times[1] - times[0] if times.shape[0] > 1 else 1.0
    v = 1.0 / dt
    frames = np.empty((times.shape[0], h, w), dtype=np.float64)
    fy = np.tanh(sharp * np.sin(2.0 * np.pi * yy / 16.0))
    for i, t in enumerate(times):
        fx = np.tanh(sharp * np.sin(2.0 * np.pi * (xx - v * t) / 16.0))
        frames[i] = np.exp(amp * fx * fy)
    return frames


def _blob_orbit(geom: SensorGeometry, times: np.ndarray) -> np.ndarray:
    # smooth gaussian bump in log intensity orbiting the image center
    h, w = geom.height, geom.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx0, cy0 = (w - 1) / 2.0, (h - 1) / 2.0
    radius = 0.25 * min(w, h)
    sigma = max(min(w, h) / 8.0, 1.0)
    span = times[-1] - times[0]
    frames = np.empty((times.shape[0], h, w), dtype=np.float64)
    for i, t in enumerate(times):
        phase = 2.0 * np.pi * (t - times[0]) / span
        cx = cx0 + radius * np.cos(phase)
        cy = cy0 + radius * np.sin(phase)
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        frames[i] = np.exp(0.1 + np.exp(-d2 / (2.0 * sigma * sigma)))
    return frames


GENERATORS = ("ramp", "translating_checkerboard", "gaussian_blob_orbit")


def make_test_sequence(
    name: str,
    geom: SensorGeometry,
    n_frames: int,
    duration: float,
) -> FrameSequence:
    """Deterministic procedural sequences with analytic ground truth."""
    if n_frames < 2:
        raise ValueError("need n_frames >= 2")
    if not duration > 0.0:
        raise ValueError("duration must be > 0")
    times = np.linspace(0.0, duration, n_frames)
    if name == "ramp":
        frames = _ramp(geom, times)
    elif name == "translating_checkerboard":
        frames = _checkerboard(geom, times)
    elif name == "gaussian_blob_orbit":
        frames = _blob_orbit(geom, times)
    else:
        raise ValueError(f"unknown generator {name!r}; valid names: {', '.join(GENERATORS)}")
    return FrameSequence(times=times, frames=frames)

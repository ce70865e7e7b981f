"""Spatial kernels, dense convolution, and per-event kernel expansion.

``expand_event`` is the event-side primitive: it turns one camera event
into the patch of weighted simultaneous impulses that true convolution of
the kernel with a single-pixel Dirac image produces.  ``convolve_dense``
is the classical frame-side counterpart, used by oracles, tests, and the
Harris smoothing step; both share the same border rule (out-of-bounds
taps are dropped, i.e. zero-filled).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Union

import numpy as np
from scipy.signal import convolve2d

from .events import Event, SensorGeometry


@dataclass(frozen=True, eq=False)
class Kernel:
    """Finite-support 2D kernel, odd dimensions, center at the middle."""

    coeffs: np.ndarray
    name: str = "custom"

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("kernel coefficients must be 2D")
        if arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
            raise ValueError(f"kernel dimensions must be odd, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("kernel coefficients must be finite")
        if not np.any(arr):
            raise ValueError("kernel must have at least one nonzero coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def radius_x(self) -> int:
        return self.coeffs.shape[1] // 2

    @property
    def radius_y(self) -> int:
        return self.coeffs.shape[0] // 2

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))

    def taps(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzero coefficients as (dy, dx, weight) offsets from the center."""
        iy, ix = np.nonzero(self.coeffs)
        dy = (iy - self.radius_y).astype(np.int64)
        dx = (ix - self.radius_x).astype(np.int64)
        w = self.coeffs[iy, ix].copy()
        return dy, dx, w


def _catalog() -> dict[str, np.ndarray]:
    return {
        "identity": np.array([[1.0]]),
        "gaussian3": np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 16.0,
        "sobel_x": np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64),
        "sobel_y": np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64),
        "laplacian": np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64),
        "box3": np.ones((3, 3), dtype=np.float64) / 9.0,
    }


KERNEL_NAMES = tuple(sorted(_catalog()))


def make_kernel(name: str) -> Kernel:
    table = _catalog()
    if name not in table:
        raise ValueError(f"unknown kernel {name!r}; valid names: {', '.join(KERNEL_NAMES)}")
    return Kernel(table[name], name=name)


def load_kernel(source: Union[IO, str], name: str = "custom") -> Kernel:
    """Load a kernel from the text format: first line "w h", then h rows
    of w coefficients.  Both dimensions must be odd."""
    if isinstance(source, str):
        with open(source, "r") as fh:
            return load_kernel(fh, name=name)
    header = source.readline().split()
    if len(header) != 2:
        raise ValueError("kernel file must start with a 'w h' line")
    w, h = int(header[0]), int(header[1])
    rows = []
    for _ in range(h):
        row = [float(v) for v in source.readline().split()]
        if len(row) != w:
            raise ValueError(f"kernel row has {len(row)} values, expected {w}")
        rows.append(row)
    return Kernel(np.array(rows, dtype=np.float64), name=name)


@dataclass(frozen=True)
class ConvolvedEvent:
    """One event expanded through a kernel: simultaneous weighted impulses.

    ``entries`` holds ((x, y), increment) pairs; zero coefficients and
    off-sensor pixels are dropped.
    """

    t: float
    entries: tuple


def expand_event(e: Event, kernel: Kernel, c: float, geom: SensorGeometry) -> ConvolvedEvent:
    """Impulse response of true convolution: pixel p_i + offset gets
    sigma * c * K(offset), K indexed from its center."""
    if c <= 0.0:
        raise ValueError(f"contrast threshold must be > 0, got {c}")
    if not geom.contains(e.x, e.y):
        raise ValueError(f"event pixel ({e.x}, {e.y}) outside sensor")
    dy, dx, w = kernel.taps()
    entries = []
    for k in range(dy.shape[0]):
        x = e.x + int(dx[k])
        y = e.y + int(dy[k])
        if 0 <= x < geom.width and 0 <= y < geom.height:
            entries.append(((x, y), e.sigma * c * float(w[k])))
    return ConvolvedEvent(t=e.t, entries=tuple(entries))


def convolve_dense(img, kernel: Kernel) -> np.ndarray:
    """True 2D convolution with zero fill outside the image (truncation)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be 2D")
    return convolve2d(arr, kernel.coeffs, mode="same", boundary="fill", fillvalue=0.0)

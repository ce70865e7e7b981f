"""Dense image read-out formats.

Images are plain 2D float64 numpy arrays in row-major (height, width)
layout.  Two sinks are supported: binary PGM (P5) for quick viewing and a
small raw float32 format ("EVCR") for bit-exact interchange between runs
and tests.
"""

from __future__ import annotations

import struct
from typing import IO

import numpy as np

RAW_MAGIC = b"EVCR"


def ensure_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def write_snapshot_pgm(img, sink: IO, lo: float, hi: float) -> None:
    """Write a binary PGM; values map linearly from [lo, hi] to [0, 255].

    Out-of-range values are clamped; quantization rounds half up.
    """
    arr = ensure_image(img)
    if not hi > lo:
        raise ValueError(f"need hi > lo, got lo={lo}, hi={hi}")
    h, w = arr.shape
    norm = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    pix = np.floor(255.0 * norm + 0.5).astype(np.uint8)
    sink.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
    sink.write(pix.tobytes())


def write_snapshot_raw(img, sink: IO) -> None:
    """Write the EVCR raw format: magic, u32le width/height, f32le data."""
    arr = ensure_image(img)
    h, w = arr.shape
    sink.write(RAW_MAGIC)
    sink.write(struct.pack("<II", w, h))
    sink.write(arr.astype("<f4").tobytes())


def read_snapshot_raw(source: IO) -> np.ndarray:
    """Read an EVCR file back as a float64 (height, width) array."""
    magic = source.read(4)
    if magic != RAW_MAGIC:
        raise ValueError(f"bad raw snapshot magic {magic!r}, expected {RAW_MAGIC!r}")
    header = source.read(8)
    if len(header) != 8:
        raise ValueError("truncated raw snapshot header")
    w, h = struct.unpack("<II", header)
    payload = source.read(4 * w * h)
    if len(payload) != 4 * w * h:
        raise ValueError(f"truncated raw snapshot payload for {w}x{h} image")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w)
    return data.astype(np.float64)

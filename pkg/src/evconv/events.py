"""Event stream data model and the plain-text event format.

An event file holds one event per line, ``t x y p``, with ``t`` in decimal
seconds and ``p`` in {0, 1} (mapped to polarity -1/+1).  Blank lines and
lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel-array dimensions of the sensor."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"sensor geometry must be >= 1x1, got {self.width}x{self.height}")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True)
class Event:
    """One asynchronous brightness-change measurement.

    ``sigma`` is +1 for a brightness increase, -1 for a decrease.
    """

    t: float
    x: int
    y: int
    sigma: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.t) or self.t < 0.0:
            raise ValueError(f"event time must be finite and >= 0, got {self.t}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"pixel indices must be >= 0, got ({self.x}, {self.y})")
        if self.sigma not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.sigma}")


def parse_event_line(line: str) -> Event:
    """Parse one ``t x y p`` line into an Event."""
    fields = line.split()
    if len(fields) != 4:
        raise ValueError(f"expected 4 fields 't x y p', got {len(fields)} in line {line!r}")
    try:
        t = float(fields[0])
        x = int(fields[1])
        y = int(fields[2])
        p = int(fields[3])
    except ValueError:
        raise ValueError(f"non-numeric token in event line {line!r}") from None
    if p not in (0, 1):
        raise ValueError(f"polarity out of range (want 0 or 1) in line {line!r}")
    if t < 0.0:
        raise ValueError(f"negative timestamp in line {line!r}")
    return Event(t=t, x=x, y=y, sigma=1 if p == 1 else -1)


def format_event_line(e: Event) -> str:
    # repr() keeps full double precision, so parse(format(e)) == e exactly.
    return f"{e.t!r} {e.x} {e.y} {1 if e.sigma > 0 else 0}"


def read_event_stream(
    source: Union[IO, Iterable[str]],
    geom: SensorGeometry,
    strict_order: bool = True,
) -> Iterator[Event]:
    """Yield events from a text or byte stream in file order.

    With ``strict_order`` any timestamp regression is an error; otherwise
    regressions are passed through for the consumer to handle.
    """
    prev_t = -math.inf
    index = 0
    for raw in source:
        line = raw.decode("ascii") if isinstance(raw, bytes) else raw
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        e = parse_event_line(stripped)
        if not geom.contains(e.x, e.y):
            raise ValueError(
                f"event {index}: pixel ({e.x}, {e.y}) outside {geom.width}x{geom.height} sensor"
            )
        if strict_order and e.t < prev_t:
            raise ValueError(
                f"event {index}: timestamp regression {e.t!r} after {prev_t!r}"
            )
        prev_t = e.t
        yield e
        index += 1


def write_event_stream(events: Iterable[Event], sink: IO) -> None:
    """Write events in the text format; accepts text or binary sinks."""
    for e in events:
        line = format_event_line(e) + "\n"
        try:
            sink.write(line)
        except TypeError:
            sink.write(line.encode("ascii"))


def events_to_arrays(
    events: Union[Sequence[Event], tuple],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Pack events into (t, x, y, sigma) arrays for the batch engine paths.

    Accepts either a sequence of Event or an already-packed 4-tuple of
    arrays, which is returned with dtypes normalized.
    """
    if isinstance(events, tuple) and len(events) == 4:
        t, x, y, s = events
        return (
            np.ascontiguousarray(t, dtype=np.float64),
            np.ascontiguousarray(x, dtype=np.int64),
            np.ascontiguousarray(y, dtype=np.int64),
            np.ascontiguousarray(s, dtype=np.int64),
        )
    n = len(events)
    t = np.empty(n, dtype=np.float64)
    x = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    s = np.empty(n, dtype=np.int64)
    for i, e in enumerate(events):
        t[i] = e.t
        x[i] = e.x
        y[i] = e.y
        s[i] = e.sigma
    return t, x, y, s


def arrays_to_events(t, x, y, s) -> list[Event]:
    return [Event(float(ti), int(xi), int(yi), int(si)) for ti, xi, yi, si in zip(t, x, y, s)]

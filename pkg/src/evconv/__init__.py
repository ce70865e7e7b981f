"""evconv: spatial convolutions and a Harris corner state computed
directly on event-camera streams via exactly-interpolated per-pixel
continuous-time high-pass filters."""

from .events import (
    Event,
    SensorGeometry,
    parse_event_line,
    format_event_line,
    read_event_stream,
    write_event_stream,
)
from .filter import (
    FilterBank,
    FilterParams,
    FilterState,
    closed_form_oracle,
    process_stream,
)
from .harris import (
    Corner,
    HarrisParams,
    HarrisState,
    chec_pipeline,
    dense_response,
    detect_corners_from_response,
    harris_matrix_at,
    harris_response,
)
from .imageio import read_snapshot_raw, write_snapshot_pgm, write_snapshot_raw
from .kernels import (
    KERNEL_NAMES,
    ConvolvedEvent,
    Kernel,
    convolve_dense,
    expand_event,
    load_kernel,
    make_kernel,
)
from .poisson import apply_laplacian, divergence, reconstruct_from_gradients, solve_poisson
from .synth import FrameSequence, GENERATORS, generate_events, generate_event_arrays, make_test_sequence

__version__ = "0.1.0"

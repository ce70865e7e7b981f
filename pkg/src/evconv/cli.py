"""Command-line front end.

Subcommands: filter (kernel channels to snapshots), corners (continuous
Harris corner state), reconstruct (Poisson), synth (test-data factory),
bench (throughput and kernel-size scaling).  Diagnostics go to stderr;
data goes to files only, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time

import numpy as np

from . import harris, poisson, synth
from .events import SensorGeometry, read_event_stream, events_to_arrays, arrays_to_events
from .filter import FilterBank, FilterParams, FilterState, closed_form_oracle, process_stream
from .imageio import read_snapshot_raw, write_snapshot_pgm, write_snapshot_raw
from .kernels import KERNEL_NAMES, load_kernel, make_kernel


def _geom(args) -> SensorGeometry:
    return SensorGeometry(width=args.width, height=args.height)


def _load_events(args, geom: SensorGeometry):
    with open(args.input, "r") as fh:
        events = list(read_event_stream(fh, geom, strict_order=args.strict))
    return events_to_arrays(events)


def _resolve_kernel(spec: str):
    if spec in KERNEL_NAMES:
        return make_kernel(spec)
    if os.path.sep in spec or os.path.exists(spec):
        return load_kernel(spec, name=os.path.splitext(os.path.basename(spec))[0])
    # raises with the list of valid names
    return make_kernel(spec)


def _sample_times(args, t_arr) -> list[float]:
    if args.sample_times is not None:
        times = [float(v) for v in args.sample_times.split(",")]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("--sample-times must be sorted ascending")
        return times
    if args.sample_rate is None:
        raise ValueError("need --sample-rate or --sample-times")
    if t_arr.shape[0] == 0:
        return []
    step = 1.0 / args.sample_rate
    t_end = float(t_arr[-1])
    return [k * step for k in range(1, int(math.floor(t_end / step)) + 1)]


def _norm_bounds(img: np.ndarray, norm: str) -> tuple[float, float]:
    if norm == "auto":
        # symmetric bounds so zero maps to mid-gray
        m = float(np.abs(img).max())
        if m == 0.0:
            m = 1.0
        return -m, m
    lo, hi = (float(v) for v in norm.split(","))
    return lo, hi


def _write_image(img: np.ndarray, outdir: str, stem: str, norm: str) -> None:
    lo, hi = _norm_bounds(img, norm)
    with open(os.path.join(outdir, stem + ".pgm"), "wb") as fh:
        write_snapshot_pgm(img, fh, lo, hi)
    with open(os.path.join(outdir, stem + ".evcr"), "wb") as fh:
        write_snapshot_raw(img, fh)


def cmd_filter(args) -> int:
    geom = _geom(args)
    kernels = [_resolve_kernel(name) for name in args.kernel]
    names = [k.name for k in kernels]
    if len(set(names)) != len(names):
        raise ValueError("kernel names must be unique per run")
    arrays = _load_events(args, geom)
    samples = _sample_times(args, arrays[0])
    params = [FilterParams(alpha=args.alpha, c=args.contrast) for _ in kernels]
    bank = FilterBank([FilterState(geom, k, p, strict=args.strict) for k, p in zip(kernels, params)])
    os.makedirs(args.output_dir, exist_ok=True)
    n_events = arrays[0].shape[0]
    start = time.perf_counter()
    for i, (ts, snaps) in enumerate(process_stream(bank, arrays, samples)):
        for name, img in zip(names, snaps):
            _write_image(img, args.output_dir, f"{name}_{i:04d}", args.norm)
    elapsed = time.perf_counter() - start
    rate = n_events / elapsed if elapsed > 0 and n_events else 0.0
    print(
        f"filter: {n_events} events, {len(samples)} samples, "
        f"{elapsed:.3f} s, {rate:.0f} events/s",
        file=sys.stderr,
    )
    return 0


def cmd_corners(args) -> int:
    geom = _geom(args)
    arrays = _load_events(args, geom)
    samples = _sample_times(args, arrays[0])
    smoothing = make_kernel(args.smoothing)
    threshold = args.threshold
    if threshold is None:
        threshold = _auto_threshold(arrays, geom, args, smoothing, samples)
        print(f"corners: auto threshold {threshold:.6g}", file=sys.stderr)
    params = harris.HarrisParams(
        response_threshold=threshold,
        gamma=args.gamma,
        smoothing=smoothing,
        nms_radius=args.nms_radius,
        alpha=args.alpha,
    )
    os.makedirs(args.output_dir, exist_ok=True)
    start = time.perf_counter()
    results = harris.chec_pipeline(arrays, geom, params, args.contrast, samples, strict=args.strict)
    elapsed = time.perf_counter() - start
    for i, (ts, corners, resp) in enumerate(results):
        with open(os.path.join(args.output_dir, f"corners_{i:04d}.txt"), "w") as fh:
            harris.write_corners(corners, fh)
        _write_image(resp, args.output_dir, f"response_{i:04d}", args.norm)
    n_events = arrays[0].shape[0]
    rate = n_events / elapsed if elapsed > 0 and n_events else 0.0
    print(
        f"corners: {n_events} events, {len(samples)} samples, "
        f"{elapsed:.3f} s, {rate:.0f} events/s",
        file=sys.stderr,
    )
    return 0


def _auto_threshold(arrays, geom, args, smoothing, samples) -> float:
    """99th percentile of |R| over the first sample; tiny floor if flat."""
    if not samples:
        return np.finfo(np.float64).tiny
    probe = harris.HarrisParams(
        response_threshold=np.inf,
        gamma=args.gamma,
        smoothing=smoothing,
        nms_radius=args.nms_radius,
        alpha=args.alpha,
    )
    results = harris.chec_pipeline(arrays, geom, probe, args.contrast, samples[:1], strict=args.strict)
    resp = results[0][2]
    thr = float(np.percentile(np.abs(resp), 99.0))
    return thr if thr > 0.0 else float(np.finfo(np.float64).tiny)


def cmd_reconstruct(args) -> int:
    if args.mode == "laplacian":
        if len(args.snapshots) != 1:
            raise ValueError("laplacian mode takes exactly one snapshot")
        with open(args.snapshots[0], "rb") as fh:
            rhs = read_snapshot_raw(fh)
        img = poisson.solve_poisson(rhs)
    else:
        if len(args.snapshots) != 2:
            raise ValueError("gradients mode takes exactly two snapshots (gx, gy)")
        with open(args.snapshots[0], "rb") as fh:
            gx = read_snapshot_raw(fh)
        with open(args.snapshots[1], "rb") as fh:
            gy = read_snapshot_raw(fh)
        img = poisson.reconstruct_from_gradients(gx, gy)
    os.makedirs(args.output_dir, exist_ok=True)
    _write_image(img, args.output_dir, "recon", args.norm)
    print(f"reconstruct: wrote {args.output_dir}/recon.pgm (+.evcr)", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    geom = _geom(args)
    seq = synth.make_test_sequence(args.name, geom, args.frames, args.duration)
    arrays = synth.generate_event_arrays(seq, args.contrast)
    os.makedirs(args.output_dir, exist_ok=True)
    with open(os.path.join(args.output_dir, "events.txt"), "w") as fh:
        fh.write(f"# {args.name} {geom.width}x{geom.height} c={args.contrast!r}\n")
        from .events import write_event_stream

        write_event_stream(arrays_to_events(*arrays), fh)
    with open(os.path.join(args.output_dir, "gt_times.txt"), "w") as fh:
        for i, t in enumerate(seq.times):
            fh.write(f"{i} {t!r}\n")
    for i in range(seq.frames.shape[0]):
        with open(os.path.join(args.output_dir, f"gt_frame_{i:04d}.evcr"), "wb") as fh:
            write_snapshot_raw(seq.frames[i], fh)
    print(
        f"synth: {arrays[0].shape[0]} events, {seq.frames.shape[0]} ground-truth frames",
        file=sys.stderr,
    )
    return 0


def run_bench(arrays, geom: SensorGeometry, kernel_names, alpha, c, repetitions, sample_times=None):
    """Time the incremental engine and the closed-form oracle per sample.

    Returns one row dict per (kernel, repetition).
    """
    t_arr = arrays[0]
    if not sample_times:
        sample_times = [float(t_arr[-1]) if t_arr.shape[0] else 0.0]
    rows = []
    for name in kernel_names:
        kernel = _resolve_kernel(name)
        params = FilterParams(alpha=alpha, c=c)
        # warm-up outside the timed region (jit compilation, caches)
        warm = FilterState(geom, kernel, params, strict=False)
        warm.process_events(arrays)
        for rep in range(repetitions):
            state = FilterState(geom, kernel, params, strict=False)
            start = time.perf_counter()
            state.process_events(arrays)
            inc_s = time.perf_counter() - start
            start = time.perf_counter()
            for ts in sample_times:
                upto = int(np.searchsorted(t_arr, ts, side="right"))
                chunk = tuple(a[:upto] for a in arrays)
                closed_form_oracle(chunk, kernel, params, geom, float(ts))
            oracle_s = time.perf_counter() - start
            n = t_arr.shape[0]
            rows.append(
                {
                    "kernel": kernel.name,
                    "rep": rep,
                    "events": n,
                    "nnz": kernel.nnz,
                    "seconds": inc_s,
                    "events_per_s": (n / inc_s) if (n and inc_s > 0) else 0.0,
                    "ns_per_event": (1e9 * inc_s / n) if n else 0.0,
                    "ns_per_event_per_nnz": (1e9 * inc_s / n / kernel.nnz) if n else 0.0,
                    "oracle_seconds": oracle_s,
                }
            )
    return rows


def cmd_bench(args) -> int:
    geom = _geom(args)
    arrays = _load_events(args, geom)
    samples = None
    if args.sample_times is not None or args.sample_rate is not None:
        samples = _sample_times(args, arrays[0])
    rows = run_bench(arrays, geom, args.kernel, args.alpha, args.contrast,
                     args.repetitions, sample_times=samples)
    os.makedirs(args.output_dir, exist_ok=True)
    path = os.path.join(args.output_dir, "bench.csv")
    fields = [
        "kernel", "rep", "events", "nnz", "seconds",
        "events_per_s", "ns_per_event", "ns_per_event_per_nnz", "oracle_seconds",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    best = {}
    for row in rows:
        k = row["kernel"]
        if k not in best or row["ns_per_event"] < best[k]["ns_per_event"]:
            best[k] = row
    for k, row in best.items():
        print(
            f"bench: {k}: {row['ns_per_event']:.1f} ns/event "
            f"({row['ns_per_event_per_nnz']:.1f} ns/event/nnz, "
            f"{row['events_per_s']:.3g} events/s)",
            file=sys.stderr,
        )
    if "identity" in best and "gaussian3" in best and best["identity"]["ns_per_event"] > 0:
        ratio = best["gaussian3"]["ns_per_event"] / best["identity"]["ns_per_event"]
        print(f"bench: gaussian3/identity ns-per-event ratio {ratio:.2f} "
              f"(nonzero-count ratio 9)", file=sys.stderr)
    print(f"bench: wrote {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evconv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, events=True):
        if events:
            p.add_argument("--input", required=True, help="event text file")
        p.add_argument("--output-dir", required=True)
        p.add_argument("--width", type=int, default=240)
        p.add_argument("--height", type=int, default=180)
        p.add_argument("--contrast", type=float, default=0.1, help="contrast threshold c")
        p.add_argument("--norm", default="auto", help="'auto' or 'lo,hi' PGM bounds")
        order = p.add_mutually_exclusive_group()
        order.add_argument("--strict", dest="strict", action="store_true", default=True)
        order.add_argument("--lenient", dest="strict", action="store_false")

    def add_sampling(p):
        grp = p.add_mutually_exclusive_group()
        grp.add_argument("--sample-rate", type=float, default=None, help="samples per second")
        grp.add_argument("--sample-times", default=None, help="comma-separated seconds")

    p = sub.add_parser("filter", help="run kernel channels and write snapshots")
    add_common(p)
    add_sampling(p)
    p.add_argument("--kernel", action="append", required=True,
                   help=f"kernel name ({', '.join(KERNEL_NAMES)}) or kernel file; repeatable")
    p.add_argument("--alpha", type=float, default=math.tau, help="filter gain, rad/s")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("corners", help="continuous Harris corner state")
    add_common(p)
    add_sampling(p)
    p.add_argument("--alpha", type=float, default=10.0, help="filter gain, rad/s")
    p.add_argument("--gamma", type=float, default=0.04)
    p.add_argument("--threshold", type=float, default=None,
                   help="absolute response threshold (default: 99th pct of |R| at the first sample)")
    p.add_argument("--nms-radius", type=int, default=1)
    p.add_argument("--smoothing", choices=["box3", "gaussian3"], default="box3")
    p.set_defaults(func=cmd_corners)

    p = sub.add_parser("reconstruct", help="Poisson reconstruction from snapshots")
    p.add_argument("snapshots", nargs="+", help="one Laplacian or gx gy raw snapshots")
    p.add_argument("--mode", choices=["laplacian", "gradients"], required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--norm", default="auto")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="generate a synthetic event stream + ground truth")
    p.add_argument("--name", choices=list(synth.GENERATORS), required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--contrast", type=float, default=0.1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="incremental vs oracle timing, CSV output")
    add_common(p)
    add_sampling(p)
    p.add_argument("--kernel", action="append", required=True)
    p.add_argument("--alpha", type=float, default=math.tau)
    p.add_argument("--repetitions", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"evconv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

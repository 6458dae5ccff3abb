"""Command-line front door.

Subcommands:
  layout  dump target positions and motion parameters at t = 0 as CSV
  trace   run a scenario file, write per-sample per-target metrics as CSV
  sweep   run the target-count sweep and write the results table as CSV
  replay  re-run detection over a recorded gaze log
  serve   start the interactive stream service

trace and replay print fired events as JSON lines on stdout; CSV output
goes to --out. All commands are deterministic given their inputs. Exit
status is 0 on success, 1 with a one-line diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Iterable, Sequence, TextIO

from .detector import (
    CORRELATION,
    METHODS,
    SLOPE,
    DetectorConfig,
    DetectionEvent,
    GazeSample,
    PursuitDetector,
)
from .errors import PursuitError, ScenarioFormatError
from .simulator import (
    TraceRow,
    generate_gaze,
    load_scenario,
    run_scenario,
    run_stream,
    sweep,
    targets_at_ms,
)
from .trajectories import (
    DEFAULT_SCREEN,
    SELECTABLE_COUNTS,
    DialPlateLayout,
    dialplate_layout,
)

GAZE_LOG_HEADER = ("t_ms", "gx_px", "gy_px")

TRACE_HEADER = (
    "t",
    "target",
    "slope_x",
    "slope_y",
    "corr_x",
    "corr_y",
    "cond_x",
    "cond_y",
    "cond_both",
    "consecutive",
    "event",
)

# Accepted override keys in a --config file, with aliases.
_CONFIG_KEYS = {
    "window": "window_size",
    "window_size": "window_size",
    "smoothing": "smoothing_k",
    "smoothing_k": "smoothing_k",
    "min_duration": "min_duration",
    "threshold": "threshold",
    "skip": "skip_samples",
    "skip_samples": "skip_samples",
    "sample_rate": "sample_rate",
}


def load_config(method: str, path: str | None) -> DetectorConfig:
    """Detector defaults for the method, with overrides from a JSON file.

    The file is a flat object; any detection parameter may be overridden
    by name (threshold takes a number for correlation, [lo, hi] for slope).
    """
    overrides: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ScenarioFormatError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(raw, dict):
            raise ScenarioFormatError(f"{path}: config must be a flat object")
        for key, value in raw.items():
            if key == "method":
                continue
            field = _CONFIG_KEYS.get(key)
            if field is None:
                raise ScenarioFormatError(f"{path}: unknown parameter {key!r}")
            if field == "threshold" and isinstance(value, list):
                value = tuple(value)
            overrides[field] = value
    try:
        return DetectorConfig.defaults(method, **overrides)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"invalid detector parameters: {exc}") from exc


def write_gaze_log(samples: Iterable[GazeSample], fh: TextIO) -> None:
    """CSV with header t_ms,gx_px,gy_px; floats round-trip exactly."""
    writer = csv.writer(fh)
    writer.writerow(GAZE_LOG_HEADER)
    for s in samples:
        writer.writerow((repr(s.t_ms), repr(s.x), repr(s.y)))


def read_gaze_log(path: str) -> list[GazeSample]:
    """Parse a gaze log, rejecting malformed or out-of-order rows.

    Diagnostics name the file and 1-based line number.
    """
    samples: list[GazeSample] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != GAZE_LOG_HEADER:
            raise ScenarioFormatError(
                f"{path}: line 1: expected header {','.join(GAZE_LOG_HEADER)}"
            )
        prev_t: float | None = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ScenarioFormatError(
                    f"{path}: line {lineno}: expected 3 columns, got {len(row)}"
                )
            try:
                t_ms, x, y = (float(v) for v in row)
            except ValueError:
                raise ScenarioFormatError(
                    f"{path}: line {lineno}: non-numeric value in {row!r}"
                ) from None
            if prev_t is not None and t_ms <= prev_t:
                raise ScenarioFormatError(
                    f"{path}: line {lineno}: timestamp {t_ms} does not increase"
                )
            prev_t = t_ms
            samples.append(GazeSample(t_ms=t_ms, x=x, y=y))
    return samples


def _metric_cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_trace(rows: Iterable[TraceRow], fh: TextIO) -> None:
    writer = csv.writer(fh)
    writer.writerow(TRACE_HEADER)
    for r in rows:
        writer.writerow(
            (
                repr(r.t_s),
                r.target_id,
                _metric_cell(r.slope_x),
                _metric_cell(r.slope_y),
                _metric_cell(r.corr_x),
                _metric_cell(r.corr_y),
                int(r.cond_x),
                int(r.cond_y),
                int(r.cond_both),
                r.consecutive,
                int(r.event),
            )
        )


def print_events(events: Iterable[DetectionEvent], layout: DialPlateLayout) -> None:
    for e in events:
        print(
            json.dumps(
                {
                    "type": "event",
                    "target_id": e.target_id,
                    "label": layout.by_id(e.target_id).label,
                    "t_ms": e.t_ms,
                    "method": e.method,
                }
            )
        )


def _open_out(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="", encoding="utf-8")


def _parse_screen(text: str) -> tuple[float, float]:
    try:
        w, h = text.lower().split("x")
        return (float(w), float(h))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"screen must look like 1920x1080, got {text!r}"
        ) from None


def _parse_counts(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"counts must be comma-separated integers, got {text!r}"
        ) from None


def cmd_layout(args: argparse.Namespace) -> int:
    layout = dialplate_layout(args.targets, args.screen)
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(("id", "label", "x", "y", "radius", "period_s", "direction", "phase"))
        for spec in layout.targets:
            x, y = spec.trajectory.position_at(0.0)
            writer.writerow(
                (
                    spec.id,
                    spec.label,
                    repr(x),
                    repr(y),
                    spec.trajectory.radius,
                    spec.trajectory.period,
                    1 if spec.trajectory.clockwise else -1,
                    repr(spec.trajectory.phase),
                )
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    config = load_config(args.method, args.config)
    metrics = run_scenario(scenario, [config], collect_trace=True)
    run = metrics.runs[0]

    out = _open_out(args.out)
    try:
        write_trace(run.trace, out)
    finally:
        if out is not sys.stdout:
            out.close()

    if args.gaze_log is not None:
        with open(args.gaze_log, "w", newline="", encoding="utf-8") as fh:
            write_gaze_log(generate_gaze(scenario), fh)

    if out is not sys.stdout:
        print_events(run.events, scenario.layout)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.method == "both":
        configs = [load_config(SLOPE, args.config), load_config(CORRELATION, args.config)]
    else:
        configs = [load_config(args.method, args.config)]
    for count in args.counts:
        if count not in SELECTABLE_COUNTS:
            print(f"error: unsupported target count {count}", file=sys.stderr)
            return 1
    rows = sweep(
        args.counts,
        configs,
        repetitions=args.repetitions,
        seed=args.seed,
        rotations=args.rotations,
        screen=args.screen,
    )
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(
            (
                "targets",
                "method",
                "repetition",
                "pursued",
                "detected",
                "latency_samples",
                "latency_ms",
                "false_positives",
            )
        )
        for r in rows:
            writer.writerow(
                (
                    r.target_count,
                    r.method,
                    r.repetition,
                    r.pursued_id,
                    int(r.detected),
                    "" if r.latency_samples is None else r.latency_samples,
                    "" if r.latency_ms is None else repr(r.latency_ms),
                    r.false_positives,
                )
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    samples = read_gaze_log(args.log)
    layout = dialplate_layout(args.targets, args.screen)
    config = load_config(args.method, args.config)
    detector = PursuitDetector(config, layout.ids)
    positions = [targets_at_ms(layout, s.t_ms) for s in samples]
    result = run_stream(detector, samples, positions, collect_trace=args.out is not None)
    if args.out is not None:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_trace(result.trace, fh)
    print_events(result.events, layout)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    return serve(
        host=args.host,
        port=args.port,
        ws_port=args.ws_port,
        web_root=args.web_root,
        task_timeout_s=args.task_timeout_s,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pursuitkit",
        description="Smooth-pursuit target selection: analysis tools and stream service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, method: bool = True) -> None:
        if method:
            p.add_argument("--method", choices=METHODS, default=SLOPE)
            p.add_argument("--config", default=None, help="JSON file overriding detector parameters")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("layout", help="dump target positions at t=0 as CSV")
    p.add_argument("--targets", type=int, required=True, choices=SELECTABLE_COUNTS)
    p.add_argument("--screen", type=_parse_screen, default=DEFAULT_SCREEN)
    add_common(p, method=False)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("trace", help="run a scenario file and write a metric trace CSV")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--gaze-log", default=None, help="also write the generated gaze stream here")
    add_common(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("sweep", help="run the target-count sweep and write a CSV table")
    p.add_argument(
        "--counts",
        type=_parse_counts,
        default=list(SELECTABLE_COUNTS),
        help="comma-separated target counts (default: all supported)",
    )
    p.add_argument("--method", choices=[*METHODS, "both"], default="both")
    p.add_argument("--config", default=None, help="JSON file overriding detector parameters")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--rotations", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--screen", type=_parse_screen, default=DEFAULT_SCREEN)
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run detection over a recorded gaze log")
    p.add_argument("log", help="gaze log CSV with columns t_ms,gx_px,gy_px")
    p.add_argument("--targets", type=int, required=True, choices=SELECTABLE_COUNTS)
    p.add_argument("--screen", type=_parse_screen, default=DEFAULT_SCREEN)
    add_common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the interactive stream service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8433, help="TCP port for newline-delimited JSON")
    p.add_argument("--ws-port", type=int, default=None, help="optional WebSocket/HTTP port")
    p.add_argument("--web-root", default=None, help="static directory served on the ws port")
    p.add_argument(
        "--task-timeout-s",
        type=float,
        default=90.0,
        help="seconds before an unfinished entry task fails",
    )
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PursuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

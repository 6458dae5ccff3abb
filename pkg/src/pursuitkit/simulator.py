"""Deterministic synthetic gaze and scenario execution.

A Scenario pins down everything that influences the generated stream:
layout, pursuit schedule, duration, sample rate, gaze model, and RNG seed.
The same scenario always yields bit-identical samples, events, and traces,
which is what makes replay-equivalence and sweep tests meaningful.

The gaze model is deliberately simple: the synthetic eye tracks the
scheduled target with a gain about the layout center and a fixed lag,
holds still when nothing is pursued, and the reported coordinate is an
affine (per-axis scale about center, plus offset) image of that true gaze
with isotropic Gaussian noise on top.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .detector import DetectorConfig, DetectionEvent, GazeSample, PursuitDetector
from .errors import ScenarioFormatError
from .trajectories import (
    DEFAULT_SCREEN,
    ROTATION_PERIOD_S,
    TWO_PI,
    CircularTrajectory,
    DialPlateLayout,
    TargetSpec,
    dialplate_layout,
)

DEFAULT_SAMPLE_RATE_HZ = 60.0


@dataclass(frozen=True)
class GazeModel:
    """How the synthetic eye and tracker distort true target motion."""

    pursuit_gain: float = 1.0
    latency_ms: float = 0.0
    noise_sigma: float = 0.0
    scale: tuple[float, float] = (1.0, 1.0)
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError(f"latency_ms must be >= 0, got {self.latency_ms}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def is_identity(self) -> bool:
        return (
            self.pursuit_gain == 1.0
            and self.latency_ms == 0.0
            and self.noise_sigma == 0.0
            and self.scale == (1.0, 1.0)
            and self.offset == (0.0, 0.0)
        )


@dataclass(frozen=True)
class PursuitInterval:
    """One schedule entry: pursue target_id (None = look at nothing new)."""

    target_id: int | None
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError("interval bounds must be finite")
        if not self.start_s < self.end_s:
            raise ValueError(
                f"interval needs start < end, got [{self.start_s}, {self.end_s})"
            )


@dataclass(frozen=True)
class Scenario:
    layout: DialPlateLayout
    schedule: tuple[PursuitInterval, ...]
    duration_s: float
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ
    gaze_model: GazeModel = field(default_factory=GazeModel)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "schedule", tuple(self.schedule))
        known = set(self.layout.ids)
        prev_end = None
        for iv in sorted(self.schedule, key=lambda iv: iv.start_s):
            if iv.target_id is not None and iv.target_id not in known:
                raise ValueError(f"schedule references unknown target id {iv.target_id}")
            if iv.start_s < 0 or iv.end_s > self.duration_s:
                raise ValueError(
                    f"interval [{iv.start_s}, {iv.end_s}) outside [0, {self.duration_s}]"
                )
            if prev_end is not None and iv.start_s < prev_end:
                raise ValueError("schedule intervals overlap")
            prev_end = iv.end_s

    @property
    def sample_count(self) -> int:
        return round(self.duration_s * self.sample_rate)

    @property
    def dt_ms(self) -> float:
        return 1000.0 / self.sample_rate


def pursued_sequence(scenario: Scenario) -> list[int | None]:
    """Pursued target id for each sample tick (None outside all intervals)."""
    ordered = sorted(scenario.schedule, key=lambda iv: iv.start_s)
    out: list[int | None] = []
    k = 0
    for i in range(scenario.sample_count):
        t_s = (i * scenario.dt_ms) / 1000.0
        while k < len(ordered) and t_s >= ordered[k].end_s:
            k += 1
        if k < len(ordered) and ordered[k].start_s <= t_s < ordered[k].end_s:
            out.append(ordered[k].target_id)
        else:
            out.append(None)
    return out


def generate_gaze(scenario: Scenario) -> list[GazeSample]:
    """Synthesize the reported gaze stream for a scenario.

    Per tick: the true gaze is the pursued target's position at
    (t - latency), pulled toward the layout center by pursuit_gain; during
    unscheduled stretches it holds its last value (layout center before any
    pursuit). Scale (about center), offset, and noise then map true gaze to
    the reported coordinate. Two unit-normal draws are consumed every tick
    regardless of noise_sigma, so changing sigma never reshuffles the
    stream.
    """
    model = scenario.gaze_model
    layout = scenario.layout
    cx, cy = layout.center
    rng = random.Random(scenario.seed)
    pursued = pursued_sequence(scenario)
    sx, sy = model.scale
    dx, dy = model.offset

    samples: list[GazeSample] = []
    held_x, held_y = cx, cy
    for i in range(scenario.sample_count):
        t_ms = i * scenario.dt_ms
        tid = pursued[i]
        if tid is not None:
            tx, ty = layout.by_id(tid).trajectory.position_at(
                (t_ms - model.latency_ms) / 1000.0
            )
            if model.pursuit_gain == 1.0:
                held_x, held_y = tx, ty
            else:
                held_x = cx + model.pursuit_gain * (tx - cx)
                held_y = cy + model.pursuit_gain * (ty - cy)
        # Identity stages are skipped, not computed, so an all-identity
        # model reproduces target positions bit for bit.
        rx, ry = held_x, held_y
        if sx != 1.0 or sy != 1.0:
            rx = cx + sx * (rx - cx)
            ry = cy + sy * (ry - cy)
        if dx != 0.0 or dy != 0.0:
            rx += dx
            ry += dy
        nx = rng.gauss(0.0, 1.0)
        ny = rng.gauss(0.0, 1.0)
        if model.noise_sigma > 0:
            rx += model.noise_sigma * nx
            ry += model.noise_sigma * ny
        samples.append(GazeSample(t_ms=t_ms, x=rx, y=ry))
    return samples


def targets_at_ms(layout: DialPlateLayout, t_ms: float) -> list[tuple[int, float, float]]:
    """Target positions at a millisecond timestamp.

    The single conversion point from stream time to trajectory time; live
    ingestion and log replay both go through here so their float paths are
    identical.
    """
    return layout.positions_at(t_ms / 1000.0)


@dataclass(frozen=True)
class TraceRow:
    """Per-sample, per-target diagnostics mirroring the detector metrics."""

    t_s: float
    target_id: int
    slope_x: float | None
    slope_y: float | None
    corr_x: float | None
    corr_y: float | None
    cond_x: bool
    cond_y: bool
    consecutive: int
    event: bool

    @property
    def cond_both(self) -> bool:
        return self.cond_x and self.cond_y


@dataclass(frozen=True)
class StreamResult:
    """Raw detector output over a sample stream, before any scoring."""

    events: tuple[DetectionEvent, ...]
    event_samples: tuple[int, ...]
    trace: tuple[TraceRow, ...]


def run_stream(
    detector: PursuitDetector,
    samples: Sequence[GazeSample],
    positions: Sequence[Sequence[tuple[int, float, float]]],
    collect_trace: bool = False,
) -> StreamResult:
    """Ingest a sample stream and collect events (and optionally a trace).

    Both scenario runs and log replay drive the detector through this one
    loop, so a replayed log reproduces the original events exactly.
    """
    ids = detector.target_ids
    events: list[DetectionEvent] = []
    event_samples: list[int] = []
    trace: list[TraceRow] = []
    for i, sample in enumerate(samples):
        out = detector.ingest(sample, positions[i])
        for e in out.events:
            events.append(e)
            event_samples.append(i)
        if collect_trace:
            fired_ids = {e.target_id for e in out.events}
            t_s = sample.t_ms / 1000.0
            for tid in ids:
                m = out.metrics.get(tid)
                if m is None:
                    trace.append(
                        TraceRow(t_s, tid, None, None, None, None, False, False, 0, False)
                    )
                else:
                    trace.append(
                        TraceRow(
                            t_s,
                            tid,
                            m.slope_x,
                            m.slope_y,
                            m.corr_x,
                            m.corr_y,
                            m.cond_x,
                            m.cond_y,
                            m.consecutive,
                            tid in fired_ids,
                        )
                    )
    return StreamResult(
        events=tuple(events),
        event_samples=tuple(event_samples),
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class IntervalOutcome:
    """Detection outcome for one pursuit interval."""

    interval: PursuitInterval
    first_sample: int | None
    event_sample: int | None

    @property
    def detected(self) -> bool:
        return self.event_sample is not None

    @property
    def latency_samples(self) -> int | None:
        """Samples from interval onset up to and including the event."""
        if self.event_sample is None or self.first_sample is None:
            return None
        return self.event_sample - self.first_sample + 1


@dataclass(frozen=True)
class MethodRun:
    """One detector configuration's results over a scenario."""

    config: DetectorConfig
    events: tuple[DetectionEvent, ...]
    event_samples: tuple[int, ...]
    outcomes: tuple[IntervalOutcome, ...]
    false_positives: int
    trace: tuple[TraceRow, ...]


@dataclass(frozen=True)
class ScenarioMetrics:
    sample_count: int
    runs: tuple[MethodRun, ...]

    def run_for(self, method: str) -> MethodRun:
        for run in self.runs:
            if run.config.method == method:
                return run
        raise KeyError(method)


def run_scenario(
    scenario: Scenario,
    configs: Sequence[DetectorConfig],
    collect_trace: bool = False,
) -> ScenarioMetrics:
    """Feed one generated gaze stream through a fresh detector per config.

    A false positive is any event on a target other than the one scheduled
    at the event's sample (events during unscheduled stretches included).
    Only the first pursued-target event inside an interval sets its
    latency.
    """
    samples = generate_gaze(scenario)
    positions = [targets_at_ms(scenario.layout, s.t_ms) for s in samples]
    pursued = pursued_sequence(scenario)
    ordered = sorted(
        (iv for iv in scenario.schedule if iv.target_id is not None),
        key=lambda iv: iv.start_s,
    )

    interval_of: dict[int, int] = {}
    first_sample: dict[int, int] = {}
    for i in range(len(samples)):
        t_s = samples[i].t_ms / 1000.0
        for k, iv in enumerate(ordered):
            if iv.start_s <= t_s < iv.end_s:
                interval_of[i] = k
                first_sample.setdefault(k, i)
                break

    ids = scenario.layout.ids
    runs: list[MethodRun] = []
    for config in configs:
        detector = PursuitDetector(config, ids)
        result = run_stream(detector, samples, positions, collect_trace=collect_trace)
        event_sample_of: dict[int, int] = {}
        fp = 0
        for e, i in zip(result.events, result.event_samples):
            if e.target_id == pursued[i]:
                event_sample_of.setdefault(interval_of[i], i)
            else:
                fp += 1
        outcomes = tuple(
            IntervalOutcome(
                interval=iv,
                first_sample=first_sample.get(k),
                event_sample=event_sample_of.get(k),
            )
            for k, iv in enumerate(ordered)
        )
        runs.append(
            MethodRun(
                config=config,
                events=result.events,
                event_samples=result.event_samples,
                outcomes=outcomes,
                false_positives=fp,
                trace=result.trace,
            )
        )
    return ScenarioMetrics(sample_count=len(samples), runs=tuple(runs))


@dataclass(frozen=True)
class SweepRow:
    """One (target count, method, repetition) cell of a sweep."""

    target_count: int
    method: str
    repetition: int
    pursued_id: int
    detected: bool
    latency_samples: int | None
    latency_ms: float | None
    false_positives: int


def sweep(
    target_counts: Sequence[int],
    configs: Sequence[DetectorConfig],
    gaze_model: GazeModel | None = None,
    repetitions: int = 1,
    seed: int = 0,
    rotations: float = 2.0,
    screen: tuple[float, float] = DEFAULT_SCREEN,
) -> list[SweepRow]:
    """Run every (count, repetition) cell through all configs.

    Each cell pursues target (repetition mod count) for `rotations` full
    periods with its own derived seed, so the table is reproducible cell by
    cell.
    """
    model = gaze_model if gaze_model is not None else GazeModel()
    duration = rotations * ROTATION_PERIOD_S
    rows: list[SweepRow] = []
    for count in target_counts:
        layout = dialplate_layout(count, screen)
        for rep in range(repetitions):
            pursued_id = rep % count
            scenario = Scenario(
                layout=layout,
                schedule=(PursuitInterval(pursued_id, 0.0, duration),),
                duration_s=duration,
                gaze_model=model,
                seed=seed + 1000 * count + rep,
            )
            metrics = run_scenario(scenario, configs)
            for run in metrics.runs:
                outcome = run.outcomes[0]
                lat = outcome.latency_samples
                rows.append(
                    SweepRow(
                        target_count=count,
                        method=run.config.method,
                        repetition=rep,
                        pursued_id=pursued_id,
                        detected=outcome.detected,
                        latency_samples=lat,
                        latency_ms=None if lat is None else lat * scenario.dt_ms,
                        false_positives=run.false_positives,
                    )
                )
    return rows


# --- scenario files ---------------------------------------------------------
#
# {
#   "layout": {"targets": 20, "screen": [1920, 1080]},
#   "duration_s": 7.5,
#   "sample_rate": 60,
#   "seed": 7,
#   "gaze": {"pursuit_gain": 1.0, "latency_ms": 0.0, "noise_sigma": 0.0,
#            "scale": [1.0, 1.0], "offset": [0.0, 0.0]},
#   "schedule": [{"target": 0, "start_s": 0.0, "end_s": 5.0},
#                {"target": null, "start_s": 5.0, "end_s": 7.5}]
# }
#
# "layout" may instead carry explicit targets:
#   {"custom": [{"id": 0, "label": "0", "center": [960, 540], "radius": 130,
#                "period_s": 2.5, "direction": 1, "phase": 0.0}, ...],
#    "display_radius": 20}
# direction: 1 = clockwise, -1 = counter-clockwise. "target" in a schedule
# entry is an id, a label string, or null.


def _layout_from_json(obj: dict, where: str) -> DialPlateLayout:
    if "targets" in obj:
        screen = tuple(obj.get("screen", DEFAULT_SCREEN))
        try:
            return dialplate_layout(int(obj["targets"]), screen)  # type: ignore[arg-type]
        except ValueError as exc:
            raise ScenarioFormatError(f"{where}: {exc}") from exc
    if "custom" in obj:
        specs = []
        for j, entry in enumerate(obj["custom"]):
            try:
                period = float(entry["period_s"])
                direction = int(entry.get("direction", 1))
                if direction not in (1, -1):
                    raise ValueError(f"direction must be 1 or -1, got {direction}")
                traj = CircularTrajectory(
                    center=tuple(entry["center"]),  # type: ignore[arg-type]
                    radius=float(entry["radius"]),
                    angular_velocity=direction * TWO_PI / period,
                    phase=float(entry.get("phase", 0.0)),
                )
                specs.append(
                    TargetSpec(id=int(entry["id"]), label=str(entry["label"]), trajectory=traj)
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioFormatError(f"{where}: custom target #{j}: {exc}") from exc
        if not specs:
            raise ScenarioFormatError(f"{where}: custom layout has no targets")
        center = obj.get("center")
        if center is None:
            center = specs[0].trajectory.center
        return DialPlateLayout(
            targets=tuple(specs),
            center=tuple(center),  # type: ignore[arg-type]
            display_radius=float(obj.get("display_radius", 20.0)),
        )
    raise ScenarioFormatError(f"{where}: layout needs either 'targets' or 'custom'")


def load_scenario(path: str) -> Scenario:
    """Parse a scenario description file (schema above).

    Raises ScenarioFormatError naming the file and, for syntax errors, the
    line and column.
    """
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
        raise ScenarioFormatError(f"{path}: top level must be an object")

    for key in ("layout", "duration_s", "schedule"):
        if key not in raw:
            raise ScenarioFormatError(f"{path}: missing required key {key!r}")

    layout = _layout_from_json(raw["layout"], path)

    gaze = raw.get("gaze", {})
    if not isinstance(gaze, dict):
        raise ScenarioFormatError(f"{path}: 'gaze' must be an object")
    try:
        model = GazeModel(
            pursuit_gain=float(gaze.get("pursuit_gain", 1.0)),
            latency_ms=float(gaze.get("latency_ms", 0.0)),
            noise_sigma=float(gaze.get("noise_sigma", 0.0)),
            scale=tuple(float(v) for v in gaze.get("scale", (1.0, 1.0))),  # type: ignore[arg-type]
            offset=tuple(float(v) for v in gaze.get("offset", (0.0, 0.0))),  # type: ignore[arg-type]
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{path}: gaze model: {exc}") from exc

    intervals = []
    for j, entry in enumerate(raw["schedule"]):
        try:
            ref = entry["target"]
            if ref is None:
                tid = None
            elif isinstance(ref, str):
                tid = layout.by_label(ref).id
            else:
                tid = int(ref)
            intervals.append(
                PursuitInterval(tid, float(entry["start_s"]), float(entry["end_s"]))
            )
        except KeyError as exc:
            raise ScenarioFormatError(
                f"{path}: schedule entry #{j}: missing or unknown {exc}"
            ) from exc
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"{path}: schedule entry #{j}: {exc}") from exc

    try:
        return Scenario(
            layout=layout,
            schedule=tuple(intervals),
            duration_s=float(raw["duration_s"]),
            sample_rate=float(raw.get("sample_rate", DEFAULT_SAMPLE_RATE_HZ)),
            gaze_model=model,
            seed=int(raw.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc

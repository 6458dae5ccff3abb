"""Per-sample pursuit detection for the slope and correlation methods.

Each target owns two axis windows (gaze x vs target x, gaze y vs target y).
A sample matches a target when the configured metric is defined and inside
the threshold on both axes; a selection fires once the match has held for
min_duration consecutive samples. After any selection all buffers clear and
the next skip_samples samples are dropped to absorb user reaction time.

Smoothing (slope method) is a moving average over the last smoothing_k raw
samples. The same average is applied to the gaze signal and to each
target's coordinate stream, so the smoothing group delay cancels out of the
pairing: with 20-sample smoothing at 60 Hz the lag is ~158 ms, which on a
2.5 s rotation is a larger phase shift (0.40 rad) than the gap between
neighboring targets in a 20-target layout (0.31 rad). Smoothing only the
gaze side would therefore systematically match the trailing neighbor
instead of the pursued target.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidSampleError, LayoutMismatchError, OrderingError
from .stats import AxisWindowStats, RegressionResult

CORRELATION = "correlation"
SLOPE = "slope"
METHODS = (SLOPE, CORRELATION)

DEFAULT_SAMPLE_RATE_HZ = 60.0


@dataclass(frozen=True)
class GazeSample:
    """One timestamped gaze (or pointer-proxy) coordinate in screen pixels."""

    t_ms: float
    x: float
    y: float


@dataclass(frozen=True)
class DetectorConfig:
    """Method choice plus detection parameters.

    threshold is a lower bound for the correlation method and a closed
    (lo, hi) interval for the slope method.
    """

    method: str
    window_size: int = 30
    smoothing_k: int = 0
    min_duration: int = 20
    threshold: float | tuple[float, float] = 0.8
    skip_samples: int = 30
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.window_size < 2:
            raise ValueError(f"window_size must be >= 2, got {self.window_size}")
        if self.min_duration < 1:
            raise ValueError(f"min_duration must be >= 1, got {self.min_duration}")
        if self.smoothing_k < 0:
            raise ValueError(f"smoothing_k must be >= 0, got {self.smoothing_k}")
        if self.skip_samples < 0:
            raise ValueError(f"skip_samples must be >= 0, got {self.skip_samples}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.method == SLOPE:
            if not (isinstance(self.threshold, tuple) and len(self.threshold) == 2):
                raise ValueError("slope threshold must be a (lo, hi) interval")
            lo, hi = self.threshold
            if not lo < hi:
                raise ValueError(f"slope interval needs lo < hi, got [{lo}, {hi}]")
        else:
            if not isinstance(self.threshold, (int, float)):
                raise ValueError("correlation threshold must be a number")
            if not 0.0 < self.threshold <= 1.0:
                raise ValueError(
                    f"correlation threshold must be in (0, 1], got {self.threshold}"
                )

    @classmethod
    def correlation_defaults(cls, **overrides) -> "DetectorConfig":
        """Baseline correlation parameters: window 30, no smoothing,
        min duration 20, threshold 0.8, skip 30."""
        params = dict(
            method=CORRELATION,
            window_size=30,
            smoothing_k=0,
            min_duration=20,
            threshold=0.8,
            skip_samples=30,
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def slope_defaults(cls, **overrides) -> "DetectorConfig":
        """Slope-method parameters: window 30, smoothing 20, min duration 15,
        interval [0.77, 1.3], skip 30."""
        params = dict(
            method=SLOPE,
            window_size=30,
            smoothing_k=20,
            min_duration=15,
            threshold=(0.77, 1.3),
            skip_samples=30,
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def defaults(cls, method: str, **overrides) -> "DetectorConfig":
        if method == SLOPE:
            return cls.slope_defaults(**overrides)
        if method == CORRELATION:
            return cls.correlation_defaults(**overrides)
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")


@dataclass(frozen=True)
class DetectionEvent:
    """A fired selection."""

    target_id: int
    t_ms: float
    method: str


@dataclass(frozen=True)
class ChannelMetrics:
    """Per-target diagnostics for one ingested sample."""

    slope_x: float | None
    slope_y: float | None
    corr_x: float | None
    corr_y: float | None
    cond_x: bool
    cond_y: bool
    consecutive: int

    @property
    def cond_both(self) -> bool:
        return self.cond_x and self.cond_y


@dataclass(frozen=True)
class FrameOutput:
    """Result of ingesting one gaze sample.

    progress and metrics reflect the state at this sample, before any
    event-triggered clearing, so a fired target shows progress 1.0 on its
    event frame.
    """

    t_ms: float
    skipping: bool
    progress: dict[int, float]
    metrics: dict[int, ChannelMetrics]
    events: tuple[DetectionEvent, ...]

    @property
    def ambiguous(self) -> bool:
        return len(self.events) > 1


class _History:
    """Moving-average window over the last k raw coordinates, O(1) per push."""

    __slots__ = ("k", "_buf", "_sx", "_sy")

    def __init__(self, k: int) -> None:
        self.k = k
        self._buf: deque[tuple[float, float]] = deque()
        self._sx = 0.0
        self._sy = 0.0

    def push_mean(self, x: float, y: float) -> tuple[float, float]:
        buf = self._buf
        if len(buf) == self.k:
            ox, oy = buf.popleft()
            self._sx -= ox
            self._sy -= oy
        buf.append((x, y))
        self._sx += x
        self._sy += y
        n = len(buf)
        return (self._sx / n, self._sy / n)

    def clear(self) -> None:
        self._buf.clear()
        self._sx = 0.0
        self._sy = 0.0


class TargetChannel:
    """Detection state for one target: two axis windows plus the run length
    of consecutive samples matching on both axes."""

    __slots__ = ("x_stats", "y_stats", "consecutive", "history")

    def __init__(self, window_size: int, smoothing_k: int) -> None:
        self.x_stats = AxisWindowStats(window_size)
        self.y_stats = AxisWindowStats(window_size)
        self.consecutive = 0
        self.history = _History(smoothing_k) if smoothing_k > 0 else None

    def reset(self) -> None:
        self.x_stats.reset()
        self.y_stats.reset()
        self.consecutive = 0
        if self.history is not None:
            self.history.clear()


class PursuitDetector:
    """Streaming detector over a fixed set of target ids.

    Single-threaded mutation contract; one instance per session.
    """

    def __init__(self, config: DetectorConfig, target_ids: Iterable[int]) -> None:
        self.config = config
        self._ids = tuple(target_ids)
        if len(set(self._ids)) != len(self._ids):
            raise ValueError("target ids must be unique")
        if not self._ids:
            raise ValueError("at least one target id is required")
        self._channels = {
            tid: TargetChannel(config.window_size, config.smoothing_k) for tid in self._ids
        }
        self._gaze_history = _History(config.smoothing_k) if config.smoothing_k > 0 else None
        self._skip_left = 0
        self._last_t_ms: float | None = None

    @property
    def target_ids(self) -> tuple[int, ...]:
        return self._ids

    @property
    def skipping(self) -> bool:
        return self._skip_left > 0

    def channel(self, target_id: int) -> TargetChannel:
        return self._channels[target_id]

    def progress_snapshot(self) -> dict[int, float]:
        """Current per-target progress toward min_duration, in [0, 1]."""
        dur = self.config.min_duration
        return {tid: min(1.0, ch.consecutive / dur) for tid, ch in self._channels.items()}

    def reset(self) -> None:
        """Clear all channels, smoothing history, counters, and skip state."""
        for ch in self._channels.values():
            ch.reset()
        if self._gaze_history is not None:
            self._gaze_history.clear()
        self._skip_left = 0
        self._last_t_ms = None

    def ingest(
        self,
        sample: GazeSample,
        targets: Sequence[tuple[int, float, float]],
    ) -> FrameOutput:
        """Process one gaze sample against the targets' current positions.

        targets holds (id, x, y) for every configured target, any order.
        Raises before touching any state: OrderingError on a non-increasing
        timestamp, InvalidSampleError on non-finite coordinates, and
        LayoutMismatchError when the id set differs from the configuration.
        """
        if not (
            math.isfinite(sample.t_ms) and math.isfinite(sample.x) and math.isfinite(sample.y)
        ):
            raise InvalidSampleError(f"non-finite gaze sample {sample!r}")
        if self._last_t_ms is not None and sample.t_ms <= self._last_t_ms:
            raise OrderingError(
                f"timestamp {sample.t_ms} ms is not after previous {self._last_t_ms} ms"
            )
        if len(targets) != len(self._ids):
            raise LayoutMismatchError(
                f"expected {len(self._ids)} targets, got {len(targets)}"
            )
        for tid, px, py in targets:
            if tid not in self._channels:
                raise LayoutMismatchError(f"unknown target id {tid}")
            if not (math.isfinite(px) and math.isfinite(py)):
                raise InvalidSampleError(f"non-finite position for target {tid}")

        self._last_t_ms = sample.t_ms

        if self._skip_left > 0:
            self._skip_left -= 1
            return FrameOutput(
                t_ms=sample.t_ms,
                skipping=True,
                progress={tid: 0.0 for tid in self._ids},
                metrics={},
                events=(),
            )

        if self._gaze_history is not None:
            gx, gy = self._gaze_history.push_mean(sample.x, sample.y)
        else:
            gx, gy = sample.x, sample.y

        cfg = self.config
        progress: dict[int, float] = {}
        metrics: dict[int, ChannelMetrics] = {}
        fired: list[DetectionEvent] = []
        for tid, px, py in targets:
            ch = self._channels[tid]
            if ch.history is not None:
                px, py = ch.history.push_mean(px, py)
            ch.x_stats.push(gx, px)
            ch.y_stats.push(gy, py)
            rx = ch.x_stats.evaluate()
            ry = ch.y_stats.evaluate()
            cond_x = self._axis_condition(rx)
            cond_y = self._axis_condition(ry)
            if cond_x and cond_y:
                ch.consecutive += 1
                if ch.consecutive == cfg.min_duration:
                    fired.append(DetectionEvent(target_id=tid, t_ms=sample.t_ms, method=cfg.method))
            else:
                ch.consecutive = 0
            progress[tid] = min(1.0, ch.consecutive / cfg.min_duration)
            metrics[tid] = ChannelMetrics(
                slope_x=rx.slope,
                slope_y=ry.slope,
                corr_x=rx.correlation,
                corr_y=ry.correlation,
                cond_x=cond_x,
                cond_y=cond_y,
                consecutive=ch.consecutive,
            )

        if fired:
            for ch in self._channels.values():
                ch.reset()
            if self._gaze_history is not None:
                self._gaze_history.clear()
            self._skip_left = cfg.skip_samples

        return FrameOutput(
            t_ms=sample.t_ms,
            skipping=False,
            progress=progress,
            metrics=metrics,
            events=tuple(fired),
        )

    def _axis_condition(self, result: RegressionResult) -> bool:
        if self.config.method == SLOPE:
            if result.slope is None:
                return False
            lo, hi = self.config.threshold  # type: ignore[misc]
            return lo <= result.slope <= hi
        if result.correlation is None:
            return False
        return result.correlation >= self.config.threshold  # type: ignore[operator]

"""Smooth-pursuit target selection toolkit.

Streaming slope and correlation detectors over moving on-screen targets,
a deterministic gaze simulator, CSV analysis tools, and an interactive
symbol-entry stream service.
"""

from .detector import (
    CORRELATION,
    METHODS,
    SLOPE,
    ChannelMetrics,
    DetectionEvent,
    DetectorConfig,
    FrameOutput,
    GazeSample,
    PursuitDetector,
)
from .errors import (
    InvalidSampleError,
    LayoutMismatchError,
    OrderingError,
    PursuitError,
    ScenarioFormatError,
)
from .simulator import (
    GazeModel,
    IntervalOutcome,
    MethodRun,
    PursuitInterval,
    Scenario,
    ScenarioMetrics,
    StreamResult,
    SweepRow,
    TraceRow,
    generate_gaze,
    load_scenario,
    pursued_sequence,
    run_scenario,
    run_stream,
    sweep,
    targets_at_ms,
)
from .stats import AxisWindowStats, RegressionResult
from .service import Session
from .trajectories import (
    CANCEL_LABEL,
    CANCEL_RADIUS_PX,
    ROTATION_PERIOD_S,
    SELECTABLE_COUNTS,
    SELECTABLE_LABELS,
    SELECTABLE_RADIUS_PX,
    TARGET_DISPLAY_RADIUS_PX,
    CircularTrajectory,
    DialPlateLayout,
    TargetSpec,
    dialplate_layout,
    tangential_speed_deg_s,
)

__version__ = "0.1.0"

__all__ = [
    "AxisWindowStats",
    "CANCEL_LABEL",
    "CANCEL_RADIUS_PX",
    "CORRELATION",
    "ChannelMetrics",
    "CircularTrajectory",
    "DetectionEvent",
    "DetectorConfig",
    "DialPlateLayout",
    "FrameOutput",
    "GazeModel",
    "GazeSample",
    "IntervalOutcome",
    "InvalidSampleError",
    "LayoutMismatchError",
    "METHODS",
    "MethodRun",
    "OrderingError",
    "PursuitDetector",
    "PursuitError",
    "PursuitInterval",
    "ROTATION_PERIOD_S",
    "RegressionResult",
    "SELECTABLE_COUNTS",
    "SELECTABLE_LABELS",
    "SELECTABLE_RADIUS_PX",
    "SLOPE",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioMetrics",
    "Session",
    "StreamResult",
    "SweepRow",
    "TARGET_DISPLAY_RADIUS_PX",
    "TargetSpec",
    "TraceRow",
    "dialplate_layout",
    "generate_gaze",
    "load_scenario",
    "pursued_sequence",
    "run_scenario",
    "run_stream",
    "sweep",
    "tangential_speed_deg_s",
    "targets_at_ms",
]

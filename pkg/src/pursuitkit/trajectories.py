"""Parametric circular target motion and the dial-plate symbol layout.

Screen coordinates: x grows right, y grows down. With position
(cx + r*cos(a), cy + r*sin(a)) and angle a increasing over time, the
target moves clockwise as seen on screen, so positive angular velocity
means clockwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

CANCEL_LABEL = "CANCEL"
SELECTABLE_LABELS = "0123456789ABCDEFGHIJKLMN"
SELECTABLE_COUNTS = tuple(range(6, 25, 2))

SELECTABLE_RADIUS_PX = 130.0
CANCEL_RADIUS_PX = 80.0
ROTATION_PERIOD_S = 2.5
TARGET_DISPLAY_RADIUS_PX = 20.0
DEFAULT_SCREEN = (1920, 1080)

# Apparatus scale and the speed band where smooth pursuit is comfortable.
PX_PER_DEGREE = 50.0
PURSUIT_SPEED_BAND_DEG_S = (5.0, 20.0)


@dataclass(frozen=True)
class CircularTrajectory:
    """Uniform circular motion: center, radius, signed angular velocity, phase."""

    center: tuple[float, float]
    radius: float
    angular_velocity: float  # rad/s, positive = clockwise on screen
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be finite and > 0, got {self.radius}")
        if self.angular_velocity == 0 or not math.isfinite(self.angular_velocity):
            raise ValueError("angular_velocity must be finite and nonzero")
        object.__setattr__(self, "phase", self.phase % TWO_PI)

    @property
    def period(self) -> float:
        """Seconds per full rotation."""
        return TWO_PI / abs(self.angular_velocity)

    @property
    def clockwise(self) -> bool:
        return self.angular_velocity > 0

    def angle_at(self, t: float) -> float:
        return self.phase + self.angular_velocity * t

    def position_at(self, t: float) -> tuple[float, float]:
        """Position at time t seconds."""
        a = self.phase + self.angular_velocity * t
        cx, cy = self.center
        return (cx + self.radius * math.cos(a), cy + self.radius * math.sin(a))


@dataclass(frozen=True)
class TargetSpec:
    """One identified moving target."""

    id: int
    label: str
    trajectory: CircularTrajectory


@dataclass(frozen=True)
class DialPlateLayout:
    """A set of targets sharing one screen, plus display metadata."""

    targets: tuple[TargetSpec, ...]
    center: tuple[float, float]
    display_radius: float = TARGET_DISPLAY_RADIUS_PX
    _by_id: dict[int, TargetSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise ValueError("target ids must be unique within a layout")
        object.__setattr__(self, "_by_id", {t.id: t for t in self.targets})

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.targets)

    @property
    def cancel(self) -> TargetSpec | None:
        for t in self.targets:
            if t.label == CANCEL_LABEL:
                return t
        return None

    @property
    def selectable(self) -> tuple[TargetSpec, ...]:
        return tuple(t for t in self.targets if t.label != CANCEL_LABEL)

    def by_id(self, target_id: int) -> TargetSpec:
        return self._by_id[target_id]

    def by_label(self, label: str) -> TargetSpec:
        for t in self.targets:
            if t.label == label:
                return t
        raise KeyError(label)

    def positions_at(self, t: float) -> list[tuple[int, float, float]]:
        """(id, x, y) for every target at time t seconds."""
        out = []
        for spec in self.targets:
            x, y = spec.trajectory.position_at(t)
            out.append((spec.id, x, y))
        return out


def tangential_speed_deg_s(traj: CircularTrajectory, px_per_degree: float = PX_PER_DEGREE) -> float:
    """Target speed in degrees of visual angle per second."""
    return traj.radius * abs(traj.angular_velocity) / px_per_degree


def dialplate_layout(
    num_selectable: int,
    screen: tuple[float, float] = DEFAULT_SCREEN,
) -> DialPlateLayout:
    """Build the symbol-entry layout: evenly phased clockwise digit/letter
    targets on the 130 px circle and one counter-clockwise CANCEL on the
    80 px circle, all with a 2.5 s rotation period.

    num_selectable must be one of 6, 8, ..., 24.
    """
    if num_selectable not in SELECTABLE_COUNTS:
        raise ValueError(
            f"unsupported target count {num_selectable}; expected one of {SELECTABLE_COUNTS}"
        )
    center = (screen[0] / 2.0, screen[1] / 2.0)
    omega = TWO_PI / ROTATION_PERIOD_S

    targets = []
    for k in range(num_selectable):
        traj = CircularTrajectory(
            center=center,
            radius=SELECTABLE_RADIUS_PX,
            angular_velocity=omega,
            phase=k * TWO_PI / num_selectable,
        )
        targets.append(TargetSpec(id=k, label=SELECTABLE_LABELS[k], trajectory=traj))
        speed = tangential_speed_deg_s(traj)
        if not (PURSUIT_SPEED_BAND_DEG_S[0] <= speed <= PURSUIT_SPEED_BAND_DEG_S[1]):
            warnings.warn(
                f"target {k} moves at {speed:.1f} deg/s, outside the "
                f"{PURSUIT_SPEED_BAND_DEG_S[0]:.0f}-{PURSUIT_SPEED_BAND_DEG_S[1]:.0f} deg/s "
                "smooth-pursuit band",
                stacklevel=2,
            )
    cancel = TargetSpec(
        id=num_selectable,
        label=CANCEL_LABEL,
        trajectory=CircularTrajectory(
            center=center,
            radius=CANCEL_RADIUS_PX,
            angular_velocity=-omega,
            phase=0.0,
        ),
    )
    targets.append(cancel)
    return DialPlateLayout(targets=tuple(targets), center=center)

"""Incremental sliding-window bivariate statistics.

Maintains running sums over the last n (gaze, target) coordinate pairs so
that regression slope, intercept, and Pearson correlation come out in
constant time per sample: each new pair only adds its terms, each evicted
pair only subtracts them. Run time is independent of the window size.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import InvalidSampleError

# Variance denominators below this are treated as degenerate (pure fixation
# or frozen target); results are reported undefined instead of blowing up.
EPSILON = 1e-9

# Running sums are rebuilt from the buffer at this push interval to bound
# floating-point drift on unbounded streams.
REBUILD_INTERVAL = 10_000


@dataclass(frozen=True)
class RegressionResult:
    """Windowed fit of target coordinate (y) against gaze coordinate (x).

    A quantity is None when it is undefined: the window is not yet full,
    or the relevant variance denominator is below EPSILON.
    """

    slope: float | None
    intercept: float | None
    correlation: float | None


class AxisWindowStats:
    """Ring buffer of (gaze, target) pairs for one screen axis.

    Tracks Sx, Sy, Sxy, Sxx, Syy over the buffered pairs. push() is O(1)
    amortized; evaluate() is O(1).
    """

    __slots__ = ("capacity", "_buf", "_sx", "_sy", "_sxy", "_sxx", "_syy", "_pushes")

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._buf: deque[tuple[float, float]] = deque()
        self._sx = 0.0
        self._sy = 0.0
        self._sxy = 0.0
        self._sxx = 0.0
        self._syy = 0.0
        self._pushes = 0

    @property
    def count(self) -> int:
        return len(self._buf)

    @property
    def is_full(self) -> bool:
        return len(self._buf) == self.capacity

    @property
    def sums(self) -> tuple[float, float, float, float, float]:
        """(Sx, Sy, Sxy, Sxx, Syy) over the buffered pairs."""
        return (self._sx, self._sy, self._sxy, self._sxx, self._syy)

    def pairs(self) -> list[tuple[float, float]]:
        """Snapshot of the buffered (gaze, target) pairs, oldest first."""
        return list(self._buf)

    def push(self, x: float, y: float) -> None:
        """Append a (gaze, target) pair, evicting the oldest if full.

        Raises InvalidSampleError on non-finite input; state is untouched.
        """
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidSampleError(f"non-finite pair ({x!r}, {y!r})")
        buf = self._buf
        if len(buf) == self.capacity:
            ox, oy = buf.popleft()
            self._sx -= ox
            self._sy -= oy
            self._sxy -= ox * oy
            self._sxx -= ox * ox
            self._syy -= oy * oy
        buf.append((x, y))
        self._sx += x
        self._sy += y
        self._sxy += x * y
        self._sxx += x * x
        self._syy += y * y
        self._pushes += 1
        if self._pushes % REBUILD_INTERVAL == 0:
            self._rebuild()

    def _rebuild(self) -> None:
        sx = sy = sxy = sxx = syy = 0.0
        for x, y in self._buf:
            sx += x
            sy += y
            sxy += x * y
            sxx += x * x
            syy += y * y
        self._sx, self._sy, self._sxy, self._sxx, self._syy = sx, sy, sxy, sxx, syy

    def evaluate(self) -> RegressionResult:
        """Slope, intercept, and correlation over the current window.

        slope = (n*Sxy - Sx*Sy) / (n*Sxx - Sx^2)
        corr  = (n*Sxy - Sx*Sy) / (sqrt(n*Sxx - Sx^2) * sqrt(n*Syy - Sy^2))
        intercept = (Sy - slope*Sx) / n

        Everything is undefined until the window is full. Degenerate
        denominators never raise; they yield None.
        """
        n = len(self._buf)
        if n < self.capacity:
            return RegressionResult(None, None, None)
        num = n * self._sxy - self._sx * self._sy
        dx = n * self._sxx - self._sx * self._sx
        dy = n * self._syy - self._sy * self._sy

        slope: float | None = None
        intercept: float | None = None
        correlation: float | None = None
        if abs(dx) >= EPSILON:
            slope = num / dx
            intercept = (self._sy - slope * self._sx) / n
        if dx >= EPSILON and dy >= EPSILON:
            correlation = num / (math.sqrt(dx) * math.sqrt(dy))
        return RegressionResult(slope, intercept, correlation)

    def reset(self) -> None:
        """Empty the buffer and zero all sums."""
        self._buf.clear()
        self._sx = self._sy = self._sxy = self._sxx = self._syy = 0.0

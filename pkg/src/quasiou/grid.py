"""Uniform time grids."""

from dataclasses import dataclass

import numpy as np

from .exceptions import GridError

_REL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``origin + k * step`` for ``k = 0, ..., count - 1``.

    Parameters
    ----------
    origin : float
        First grid time (may be negative).
    step : float
        Spacing, strictly positive.
    count : int
        Number of grid points, at least 1.
    """

    origin: float
    step: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.step) or self.step <= 0:
            raise GridError(f"step must be positive, got {self.step}", module="grid")
        if int(self.count) != self.count or self.count < 1:
            raise GridError(f"count must be a positive integer, got {self.count}", module="grid")
        if not np.isfinite(self.origin):
            raise GridError("origin must be finite", module="grid")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "step", float(self.step))

    @classmethod
    def span(cls, start, stop, step):
        """Grid from ``start`` to ``stop`` inclusive; the span must be a multiple of ``step``."""
        n = (stop - start) / step
        k = int(round(n))
        if abs(n - k) > _REL * max(1.0, abs(n)):
            raise GridError(f"span [{start}, {stop}] is not a multiple of step {step}", module="grid")
        return cls(start, step, k + 1)

    @property
    def times(self):
        return self.origin + self.step * np.arange(self.count)

    @property
    def end(self):
        return self.origin + self.step * (self.count - 1)

    def index_of(self, t):
        """Index of grid time ``t``; raises if ``t`` is not on the grid."""
        x = (t - self.origin) / self.step
        k = int(round(x))
        if abs(x - k) > _REL * max(1.0, abs(x)) or not 0 <= k < self.count:
            raise GridError(f"time {t} is not a grid point of {self}", module="grid")
        return k

    @property
    def zero_index(self):
        return self.index_of(0.0)

    def contains(self, t):
        try:
            self.index_of(t)
        except GridError:
            return False
        return True

    def nonnegative(self):
        """Sub-grid of points with ``t >= 0``; requires 0 on the grid."""
        k = self.zero_index
        return TimeGrid(0.0, self.step, self.count - k)

    def refine(self, factor=2):
        """Grid over the same span with ``factor`` times as many cells."""
        return TimeGrid(self.origin, self.step / factor, (self.count - 1) * factor + 1)

    def coarsen(self, factor=2):
        if (self.count - 1) % factor:
            raise GridError(f"{self.count - 1} cells cannot be coarsened by {factor}", module="grid")
        return TimeGrid(self.origin, self.step * factor, (self.count - 1) // factor + 1)

    def extend_past(self, horizon):
        """Grid with at least ``horizon`` time units added before the origin."""
        extra = int(np.ceil(horizon / self.step - _REL))
        return TimeGrid(self.origin - extra * self.step, self.step, self.count + extra)

    def same_as(self, other):
        return (
            self.count == other.count
            and abs(self.step - other.step) <= _REL * self.step
            and abs(self.origin - other.origin) <= _REL * max(self.step, abs(self.origin))
        )

    def to_dict(self):
        return {"origin": self.origin, "step": self.step, "count": self.count}

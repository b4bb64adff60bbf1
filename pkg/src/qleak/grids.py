"""Uniform time grids.

Every integral and ODE in the library is discretized on a TimeGrid. Grid
times are always computed as t0 + k*dt from the integer index, never by
accumulation, so node values are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative tolerance for dt * n_steps == t1 - t0
_SPAN_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with n_steps intervals covering [t0, t1].

    Nodes are t0 + k*dt for k = 0..n_steps. Construct directly or via
    :meth:`from_step` / :meth:`from_count`.
    """

    t0: float
    t1: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        span = self.t1 - self.t0
        if abs(self.n_steps * self.dt - span) > _SPAN_RTOL * max(1.0, abs(span)):
            raise ValueError(
                f"inconsistent grid: {self.n_steps} * {self.dt} != {span}"
            )

    @classmethod
    def from_step(cls, t0: float, t1: float, dt: float) -> "TimeGrid":
        """Grid from a step size; (t1 - t0) must be an integer multiple of dt."""
        n = int(round((t1 - t0) / dt))
        return cls(t0, t1, dt, max(n, 1))

    @classmethod
    def from_count(cls, t0: float, t1: float, n_steps: int) -> "TimeGrid":
        """Grid from an interval count."""
        if n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {n_steps}")
        return cls(t0, t1, (t1 - t0) / n_steps, n_steps)

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_nodes)

    def time_at(self, k: int) -> float:
        if not 0 <= k <= self.n_steps:
            raise IndexError(f"node index {k} outside 0..{self.n_steps}")
        return self.t0 + self.dt * k

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Node index of a time that must lie on the grid (within tol*dt)."""
        k = int(round((t - self.t0) / self.dt))
        if not 0 <= k <= self.n_steps or abs(self.time_at(k) - t) > tol * self.dt:
            raise ValueError(f"t={t} is not a node of {self}")
        return k

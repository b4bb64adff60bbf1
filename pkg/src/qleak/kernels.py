"""Memory kernels g(t, s) and accumulated phases C(t).

A MemoryKernel serves the Volterra solver row by row: row i holds
g(t_i, s_j) for all grid nodes s_j <= t_i. Kernels either come from an
analytic callback or are derived from partition blocks by advancing
propagator columns (one RK4 step per column per row, so the whole
triangle costs O(n^2) matrix work per node pair, never a fresh
time-ordered exponential per pair).

An optional analytic delta part delta_coeff * delta(t - s) rides along
separately; it is never sampled on the grid. The Markov kernel
-2 lambda delta(t-s) is the motivating case.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grids import TimeGrid
from .partition import PQBlocks
from .propagators import _interior_eval
from .pulses import PulseSequence, StepPlan, cumulative_areas

MAX_KERNEL_NODES = 20000


def _check_nodes(grid: TimeGrid):
    if grid.n_nodes > MAX_KERNEL_NODES:
        raise ValueError(
            f"kernel table would need {grid.n_nodes} nodes "
            f"(cap {MAX_KERNEL_NODES}); use a coarser grid"
        )


class MemoryKernel:
    """g(t, s) on the lower grid triangle, plus an optional delta part.

    Construct with :meth:`from_callable`, :meth:`from_table`, or
    :func:`kernel_from_blocks`. ``delta_coeff`` is the coefficient a in
    an additional analytic term a * delta(t - s).
    """

    def __init__(self, grid: TimeGrid,
                 row_fn: Callable[[int], np.ndarray],
                 delta_coeff: complex = 0.0,
                 table: Optional[np.ndarray] = None):
        self.grid = grid
        self._row_fn = row_fn
        self.delta_coeff = complex(delta_coeff)
        self._table = table

    @classmethod
    def from_callable(cls, fn: Callable[[float, np.ndarray], np.ndarray],
                      grid: TimeGrid, delta_coeff: complex = 0.0) -> "MemoryKernel":
        """Kernel from a callback fn(t, s_array) -> array of g(t, s) values.

        The callback must accept a vector of s values (s <= t).
        """
        times = grid.times()

        def row(i: int) -> np.ndarray:
            vals = np.asarray(fn(times[i], times[:i + 1]), dtype=complex)
            if vals.shape != (i + 1,):
                raise ValueError(
                    f"kernel callback returned shape {vals.shape}, "
                    f"expected {(i + 1,)}"
                )
            return vals

        return cls(grid, row, delta_coeff=delta_coeff)

    @classmethod
    def constant(cls, value: complex, grid: TimeGrid,
                 delta_coeff: complex = 0.0) -> "MemoryKernel":
        """Kernel with a constant smooth part g(t, s) = value."""
        return cls.from_callable(
            lambda t, s: np.full(s.shape, complex(value)), grid,
            delta_coeff=delta_coeff)

    @classmethod
    def markov(cls, lam: complex, grid: TimeGrid) -> "MemoryKernel":
        """The ideal memoryless kernel -2*lam*delta(t - s); dp/dt = -lam p."""
        return cls.from_callable(
            lambda t, s: np.zeros(s.shape, dtype=complex), grid,
            delta_coeff=-2.0 * lam)

    @classmethod
    def from_table(cls, packed: np.ndarray, grid: TimeGrid,
                   delta_coeff: complex = 0.0) -> "MemoryKernel":
        """Kernel from a packed lower triangle (row-major, N(N+1)/2 values)."""
        _check_nodes(grid)
        n = grid.n_nodes
        if packed.shape != (n * (n + 1) // 2,):
            raise ValueError(
                f"packed table has {packed.shape}, expected ({n*(n+1)//2},)")

        def row(i: int) -> np.ndarray:
            off = i * (i + 1) // 2
            return packed[off:off + i + 1]

        return cls(grid, row, delta_coeff=delta_coeff, table=packed)

    def row(self, i: int) -> np.ndarray:
        """g(t_i, s_j) for j = 0..i."""
        if not 0 <= i <= self.grid.n_steps:
            raise IndexError(f"row {i} outside grid")
        vals = self._row_fn(i)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"kernel has non-finite values in row {i}")
        return vals

    def value(self, t: float, s: float) -> complex:
        i = self.grid.index_of(t)
        j = self.grid.index_of(s)
        if j > i:
            raise ValueError(f"require s <= t, got s={s} > t={t}")
        return complex(self.row(i)[j])

    def dressed(self, areas: np.ndarray, weight: float = 1.0) -> "MemoryKernel":
        """Kernel multiplied by exp(i*weight*(A(t) - A(s))) for node areas A.

        This is how pulse control acts on a kernel when the control shifts
        both the target phase and the complement block: the free kernel is
        reused and only the accumulated pulse area enters.
        """
        areas = np.asarray(areas, dtype=float)
        if areas.shape != (self.grid.n_nodes,):
            raise ValueError("areas must be sampled on the kernel grid nodes")
        phase = np.exp(1j * weight * areas)

        def row(i: int) -> np.ndarray:
            return self._row_fn(i) * (phase[i] * phase[:i + 1].conj())

        # the delta part is phase-immune: A(t) - A(s) = 0 at s = t
        return MemoryKernel(self.grid, row, delta_coeff=self.delta_coeff)


def kernel_from_blocks(blocks: PQBlocks, grid: TimeGrid,
                       scheme: str = "rk4",
                       plan: Optional[StepPlan] = None) -> MemoryKernel:
    """Build the kernel g(t, s) = R(t) G(t, s) W(s) from partition blocks.

    Columns v_j(t) = G(t, s_j) W(s_j) are advanced one step per row in a
    single stacked matrix operation; row i is R(t_i) applied to all live
    columns. scheme "rk4" (default) or "magnus2" selects the per-step
    advance; a plan adds pulse-edge substepping for fast control phases.
    """
    from scipy.linalg import expm

    _check_nodes(grid)
    n = grid.n_nodes
    nd = blocks.dim - 1
    times = grid.times()
    packed = np.empty(n * (n + 1) // 2, dtype=complex)
    cols = np.empty((nd, n), dtype=complex)
    cols[:, 0] = blocks.W(times[0])
    packed[0] = blocks.R(times[0]) @ cols[:, 0]

    def advance(view: np.ndarray, a: float, b: float, nsub: int, dfn):
        h = (b - a) / nsub
        for q in range(nsub):
            t = a + q * h
            if scheme == "rk4":
                k1 = dfn(t) @ view
                dmid = dfn(t + 0.5 * h)
                k2 = dmid @ (view + 0.5 * h * k1)
                k3 = dmid @ (view + 0.5 * h * k2)
                k4 = dfn(t + h) @ (view + h * k3)
                view += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            elif scheme == "magnus2":
                view[:] = expm(dfn(t + 0.5 * h) * h) @ view
            else:
                raise ValueError(f"unknown scheme {scheme!r}")

    for i in range(1, n):
        view = cols[:, :i]
        if plan is None:
            advance(view, times[i - 1], times[i], 1, blocks.D)
        else:
            for a, b, nsub in plan.pieces(i - 1):
                # stage samples stay on this piece's side of window edges
                advance(view, a, b, nsub, _interior_eval(blocks.D, a, b))
        cols[:, i] = blocks.W(times[i])
        off = i * (i + 1) // 2
        packed[off:off + i + 1] = blocks.R(times[i]) @ cols[:, :i + 1]

    return MemoryKernel.from_table(packed, grid)


@dataclass(frozen=True)
class PhaseAccumulator:
    """h(t) and its accumulated phase C(t) = i * integral of h, on grid nodes.

    Pulse contributions to C are exact window areas (via pulse_weight times
    the cumulative pulse area), so rectangular control never suffers
    quadrature error. C is real whenever h is purely imaginary.
    """

    grid: TimeGrid
    h_values: np.ndarray
    C: np.ndarray

    def C_at_index(self, k: int) -> complex:
        return complex(self.C[k])


def phase_integral(h: Optional[Callable[[float], complex]], grid: TimeGrid,
                   pulses: Optional[PulseSequence] = None,
                   pulse_weight: float = 1.0) -> PhaseAccumulator:
    """Accumulate C(t) = i * integral of h plus exact pulse areas.

    h is the smooth part (trapezoid on the grid; may be None for zero).
    When pulses are given, the control enters the target-component
    evolution as h -> h - i*c(t), so C gains pulse_weight times the exact
    window area, a real contribution.
    """
    times = grid.times()
    if h is None:
        hv = np.zeros(grid.n_nodes, dtype=complex)
    else:
        hv = np.asarray([h(t) for t in times], dtype=complex)
    if not np.all(np.isfinite(hv)):
        raise ValueError("h is non-finite on the grid")
    c = np.empty(grid.n_nodes, dtype=complex)
    c[0] = 0.0
    np.cumsum(0.5 * grid.dt * (hv[1:] + hv[:-1]), out=c[1:])
    c *= 1j
    if pulses is not None:
        c = c + pulse_weight * cumulative_areas(pulses, times)
    return PhaseAccumulator(grid=grid, h_values=hv, C=c)

"""Control pulse sequences c(t).

Rectangular pulse windows end at integer multiples of the period: window m
(m >= 1) occupies [m*period - duration, m*period). The level inside window
m is sign_m * strength/duration, optionally scaled by per-window amplitude
noise. All per-window draws (noise, random signs) come from counter-based
seeding of (seed, window index), so evaluation order never matters.

Phase areas are computed by exact window-overlap arithmetic, never by
sampling: the control mechanism lives entirely in the accumulated phase,
and quadrature error there is the one unforgivable error.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .grids import TimeGrid

KINDS = ("regular_rect", "noisy_rect", "ideal_delta", "none")
SIGN_POLICIES = ("periodic_flip", "random_flip", "constant")

# default cap on accumulated control phase per integrator substep (radians)
MAX_PHASE_PER_SUBSTEP = 0.05


@dataclass(frozen=True)
class PulseSequence:
    """Specification of a pulse train c(t).

    strength is the phase area per pulse window; duration the window width;
    period the window spacing. noise is the relative amplitude noise level G
    (applied only for kind="noisy_rect", one uniform draw per window, held
    constant within the window).
    """

    kind: str = "none"
    strength: float = 0.0
    duration: float = 0.0
    period: float = 0.0
    noise: float = 0.0
    sign_policy: str = "periodic_flip"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; "
                             f"choose from {KINDS}")
        if self.sign_policy not in SIGN_POLICIES:
            raise ValueError(f"unknown sign policy {self.sign_policy!r}; "
                             f"choose from {SIGN_POLICIES}")
        if self.kind in ("regular_rect", "noisy_rect"):
            if not (0 < self.duration <= self.period):
                raise ValueError(
                    f"rectangular pulses require 0 < duration <= period, "
                    f"got duration={self.duration}, period={self.period}"
                )
        if self.kind == "ideal_delta" and self.period <= 0:
            raise ValueError("ideal_delta requires a positive period")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must be in [0, 1], got {self.noise}")

    @property
    def is_rect(self) -> bool:
        return self.kind in ("regular_rect", "noisy_rect")


def _window_sign(seq: PulseSequence, m: int) -> float:
    if seq.sign_policy == "constant":
        return 1.0
    if seq.sign_policy == "periodic_flip":
        return 1.0 if m % 2 == 1 else -1.0
    rng = np.random.default_rng((seq.seed, m, 1))
    return 1.0 if rng.integers(0, 2) == 1 else -1.0


def _window_noise_factor(seq: PulseSequence, m: int) -> float:
    if seq.kind != "noisy_rect" or seq.noise == 0.0:
        return 1.0
    rng = np.random.default_rng((seq.seed, m, 0))
    return 1.0 + seq.noise * rng.uniform(-1.0, 1.0)


@lru_cache(maxsize=None)
def _level_cached(seq: PulseSequence, m: int) -> float:
    return _window_sign(seq, m) * (seq.strength / seq.duration) \
        * _window_noise_factor(seq, m)


def window_level(seq: PulseSequence, m: int) -> float:
    """Signed pulse level c inside window m (m >= 1)."""
    if m < 1:
        raise ValueError(f"window index must be >= 1, got {m}")
    if not seq.is_rect or seq.strength == 0.0:
        return 0.0
    return _level_cached(seq, m)


def _window_containing(seq: PulseSequence, t: float) -> Optional[int]:
    # window m covers [m*period - duration, m*period)
    if not seq.is_rect:
        return None
    m = int(np.floor(t / seq.period)) + 1
    if m < 1:
        return None
    if m * seq.period - seq.duration <= t < m * seq.period:
        return m
    return None


def pulse_value(seq: PulseSequence, t: float) -> float:
    """c(t). Zero outside windows; windows are half-open [m*tau - dp, m*tau)."""
    m = _window_containing(seq, t)
    if m is None:
        return 0.0
    return window_level(seq, m)


def kick_times(seq: PulseSequence, a: float, b: float) -> np.ndarray:
    """Ideal-delta kick instants m*period inside [a, b)."""
    if seq.kind != "ideal_delta":
        return np.empty(0)
    m_lo = max(1, int(np.ceil(a / seq.period - 1e-12)))
    m_hi = int(np.floor(b / seq.period - 1e-12))
    return seq.period * np.arange(m_lo, m_hi + 1)


def phase_area(seq: PulseSequence, a: float, b: float) -> float:
    """Exact integral of c(t) over [a, b] by window-overlap arithmetic."""
    if not seq.is_rect or seq.strength == 0.0 or b <= a:
        return 0.0
    out = 0.0
    m_lo = max(1, int(np.floor(a / seq.period)) + 1)
    m_hi = int(np.floor(b / seq.period)) + 1
    for m in range(m_lo, m_hi + 1):
        lo = m * seq.period - seq.duration
        hi = m * seq.period
        ov = min(b, hi) - max(a, lo)
        if ov > 0:
            out += window_level(seq, m) * ov
    return out


def cumulative_areas(seq: Optional[PulseSequence], times: np.ndarray) -> np.ndarray:
    """Integral of c from times[0] to each node, walking windows once."""
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(times)
    if seq is None or not seq.is_rect or seq.strength == 0.0:
        return out
    for k in range(1, len(times)):
        out[k] = out[k - 1] + phase_area(seq, times[k - 1], times[k])
    return out


class StepPlan:
    """Per-grid-step substep schedule resolving pulse edges and fast phases.

    Each grid step is split at window boundaries; pieces inside a window get
    enough substeps that |weight * level| * h <= max_phase radians. Built once
    and shared by propagators, kernel builders and trajectory engines.
    """

    def __init__(self, grid: TimeGrid, seq: Optional[PulseSequence],
                 weight: float = 1.0,
                 max_phase: float = MAX_PHASE_PER_SUBSTEP):
        self.grid = grid
        self.seq = seq
        self.weight = weight
        self.max_phase = max_phase
        self._pieces: List[List[Tuple[float, float, int]]] = [
            self._build(k) for k in range(grid.n_steps)
        ]

    def _build(self, k: int) -> List[Tuple[float, float, int]]:
        t0 = self.grid.time_at(k)
        t1 = self.grid.time_at(k + 1)
        seq = self.seq
        if seq is None or not seq.is_rect or seq.strength == 0.0:
            return [(t0, t1, 1)]
        edges = [t0]
        m_lo = max(1, int(np.floor(t0 / seq.period)) + 1)
        m_hi = int(np.floor(t1 / seq.period)) + 2
        eps = 1e-12 * max(1.0, abs(t1))
        for m in range(m_lo, m_hi + 1):
            for e in (m * seq.period - seq.duration, m * seq.period):
                if t0 + eps < e < t1 - eps:
                    edges.append(e)
        edges.append(t1)
        edges.sort()
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            lvl = pulse_value(seq, 0.5 * (a + b))
            nsub = max(1, int(np.ceil(
                abs(self.weight * lvl) * (b - a) / self.max_phase)))
            pieces.append((a, b, nsub))
        return pieces

    def pieces(self, k: int) -> List[Tuple[float, float, int]]:
        return self._pieces[k]

    def n_substeps(self) -> int:
        return sum(n for row in self._pieces for _, _, n in row)

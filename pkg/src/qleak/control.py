"""Leakage elimination operators, parity kicks, and Zeno projection.

All control acts by modifying the system generator; the environment
blocks are never touched directly. The central object is the parity
operator built from a target direction,

    c * (2 |A><A| - I),

which anticommutes with any coupling that moves amplitude out of the
target and commutes with anything block-diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .generators import Generator
from .grids import TimeGrid
from .partition import TARGET_NORM_ATOL
from .propagators import _rk4_step, propagate
from .pulses import PulseSequence, pulse_value

ZENO_ABSORB_EPS = 1e-30


def _check_target(target: np.ndarray) -> np.ndarray:
    target = np.asarray(target, dtype=complex)
    norm = np.linalg.norm(target)
    if norm == 0:
        raise ValueError("target vector has zero norm")
    if abs(norm - 1.0) > TARGET_NORM_ATOL:
        raise ValueError(f"target must be normalized, |v| = {float(norm):.6g}")
    return target


def leo_matrix(target: np.ndarray, c: float | complex = 1.0) -> np.ndarray:
    """The parity operator c * (2 |A><A| - I) for a unit target vector."""
    target = _check_target(target)
    n = target.shape[0]
    return c * (2.0 * np.outer(target, target.conj()) - np.eye(n))


@dataclass(frozen=True)
class LEOSpec:
    """A target direction together with the pulse train driving it."""

    target: np.ndarray
    pulses: PulseSequence

    def __post_init__(self):
        _check_target(self.target)


def rotating_leo(spec: LEOSpec, t: float) -> np.ndarray:
    """The pulsed parity operator c(t) * (2 |A><A| - I) at time t."""
    return leo_matrix(spec.target, pulse_value(spec.pulses, t))


def apply_leo(gen: Generator, spec: LEOSpec) -> Generator:
    """Controlled generator M(t) - i * R(t) with R the pulsed parity operator.

    In partitioned terms the target phase rate shifts by -i c(t) while the
    complement diagonal shifts by +i c(t), so the kernel phase contrast
    between target and complement is 2 c(t).
    """
    if spec.target.shape != (gen.dim,):
        raise ValueError(
            f"target dim {spec.target.shape[0]} does not match generator {gen.dim}"
        )

    def eval_fn(t: float) -> np.ndarray:
        return gen(t) - 1j * rotating_leo(spec, t)

    return Generator(gen.dim, eval_fn, hermitian=gen.hermitian)


def parity_kick_propagator(gen_rot: Generator, spec: LEOSpec,
                           tau_kick: float, n_kicks: int) -> np.ndarray:
    """Propagator of n_kicks cycles of (kick o free evolution over tau_kick).

    The kick is the exact unit-strength parity operator (ideal delta
    pulses, applied as operator insertions rather than tall rectangles).
    Consecutive kick pairs cancel pure leakage exactly; as tau_kick -> 0
    the product approaches block-diagonal evolution.
    """
    if spec.pulses.kind != "ideal_delta":
        raise ValueError("parity kicks require an ideal_delta pulse sequence")
    if n_kicks < 1:
        raise ValueError(f"n_kicks must be >= 1, got {n_kicks}")
    if tau_kick <= 0:
        raise ValueError(f"tau_kick must be positive, got {tau_kick}")
    z = leo_matrix(spec.target, 1.0)
    u = np.eye(gen_rot.dim, dtype=complex)
    for k in range(n_kicks):
        u = _rk4_step(gen_rot, k * tau_kick, u, tau_kick)
        u = z @ u
    return u


def block_offdiag_norm(u: np.ndarray, target: np.ndarray) -> float:
    """Frobenius norm of the blocks of u coupling target and complement.

    Zero exactly when u is block-diagonal with respect to the target
    splitting; this is the deviation measure for kick protocols.
    """
    target = _check_target(target)
    p = np.outer(target, target.conj())
    n = target.shape[0]
    q = np.eye(n) - p
    return float(np.linalg.norm(q @ u @ p) + np.linalg.norm(p @ u @ q))


class ZenoResult(NamedTuple):
    state: np.ndarray
    survival: float
    absorbed: bool


def zeno_step(state: np.ndarray, target: np.ndarray) -> ZenoResult:
    """Project a state onto the target direction and renormalize.

    Returns the projected state, the survival probability |<A|psi>|^2, and
    an absorbed flag (set instead of crashing when the overlap vanishes;
    the returned state is then the zero vector).
    """
    target = _check_target(target)
    state = np.asarray(state, dtype=complex)
    amp = complex(target.conj() @ state)
    survival = abs(amp) ** 2
    if survival <= ZENO_ABSORB_EPS:
        return ZenoResult(np.zeros_like(target), 0.0, True)
    return ZenoResult(target * (amp / abs(amp)), survival, False)


def zeno_protocol(gen: Generator, target: np.ndarray, t_final: float,
                  n_projections: int,
                  steps_per_segment: int = 20) -> ZenoResult:
    """Evolve from the target with n equally spaced projections onto it.

    Returns the final (projected) state and the total survival
    probability, the product of the per-projection survivals.
    """
    if n_projections < 1:
        raise ValueError(f"n_projections must be >= 1, got {n_projections}")
    target = _check_target(target)
    state = target.copy()
    total = 1.0
    seg = t_final / n_projections
    for j in range(n_projections):
        grid = TimeGrid.from_count(j * seg, (j + 1) * seg, steps_per_segment)
        state = propagate(gen, state, grid)[-1]
        state, survival, absorbed = zeno_step(state, target)
        total *= survival
        if absorbed:
            return ZenoResult(state, 0.0, True)
    return ZenoResult(state, total, False)

"""The one-component Volterra equation and its closed two-state solution.

The reduced amplitude p(t) of the target component obeys

    dp/dt = integral_0^t g'(t, s) p(s) ds,
    g'(t, s) = exp(i C(t)) exp(-i C(s)) g(t, s),

with C(t) = i * integral of h. The full target amplitude is
P(t) = p(t) exp(-i C(t)).

The solver uses composite trapezoid quadrature in s with trapezoid time
stepping in t; the implicit endpoint is linear in the new value and is
solved exactly, so no corrector iteration is needed. A delta part
a*delta(t - s) of the kernel contributes the analytic local term
(a/2) p(t), immune to the phase because C(t) - C(s) vanishes at s = t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import TimeGrid
from .kernels import MemoryKernel, PhaseAccumulator

# |p| beyond this aborts the solve: the inputs are unstable, not clipped
P_BLOWUP_LIMIT = 1e3


def _require_same_grid(other: TimeGrid, grid: TimeGrid, what: str) -> None:
    if other is grid:
        return
    if other.n_nodes != grid.n_nodes or not np.allclose(other.times(),
                                                        grid.times()):
        raise ValueError(f"{what} grid does not match solver grid "
                         f"({other.n_nodes} vs {grid.n_nodes} nodes)")


@dataclass(frozen=True)
class AmplitudeSeries:
    """Reduced amplitude p and full target amplitude P on grid nodes."""

    grid: TimeGrid
    p: np.ndarray
    P: np.ndarray


def solve_p(kernel: MemoryKernel, phase: PhaseAccumulator,
            grid: TimeGrid) -> AmplitudeSeries:
    """Solve the one-component equation for p with p(0) = 1.

    kernel holds the undressed g(t, s); phase supplies C(t) used to dress
    it. Returns both p and P = p * exp(-i C).
    """
    _require_same_grid(phase.grid, grid, "phase accumulator")
    _require_same_grid(kernel.grid, grid, "kernel")
    n = grid.n_nodes
    dt = grid.dt
    em = np.exp(-1j * phase.C)          # e^{-iC} at nodes
    ep = np.exp(+1j * phase.C)
    mu = 0.5 * kernel.delta_coeff       # analytic local term coefficient
    p = np.empty(n, dtype=complex)
    q = np.empty(n, dtype=complex)      # q_j = e^{-iC_j} p_j
    p[0] = 1.0
    q[0] = em[0]
    f_prev = mu * p[0]                  # F_i = dp/dt at node i; empty integral at 0
    for i in range(n - 1):
        m = i + 1
        row = kernel.row(m)
        # known part of F_m: trapezoid weights for range 0..m restricted to j < m
        a_m = ep[m] * dt * (np.dot(row[:m], q[:m]) - 0.5 * row[0] * q[0])
        # implicit part (dt/2) g_mm q_m e^{iC_m} + mu p_m is linear in p_m
        coeff = 0.5 * dt * row[m] + mu
        p_new = (p[i] + 0.5 * dt * (f_prev + a_m)) / (1.0 - 0.5 * dt * coeff)
        if abs(p_new) > P_BLOWUP_LIMIT:
            raise RuntimeError(
                f"|p| exceeded {P_BLOWUP_LIMIT:g} at t={grid.time_at(m)}; "
                "inputs are unstable"
            )
        p[m] = p_new
        q[m] = em[m] * p_new
        f_prev = a_m + coeff * p_new
    return AmplitudeSeries(grid=grid, p=p, P=p * em)


def leakage_integral(kernel: MemoryKernel, phase: PhaseAccumulator,
                     amplitude: AmplitudeSeries, t: float) -> complex:
    """I(t) = integral_0^t exp(-i C(s)) g(t, s) p(s) ds (plus delta part).

    By the equation of motion, dp/dt(t) * exp(-i C(t)) = I(t); the target
    stays leakage-free exactly when this accumulated integral vanishes.
    """
    _require_same_grid(phase.grid, amplitude.grid, "phase accumulator")
    _require_same_grid(kernel.grid, amplitude.grid, "kernel")
    i = amplitude.grid.index_of(t)
    q = np.exp(-1j * phase.C[:i + 1]) * amplitude.p[:i + 1]
    acc = 0.0 + 0.0j
    if i > 0:
        row = kernel.row(i)
        acc = amplitude.grid.dt * (np.dot(row, q)
                                   - 0.5 * row[0] * q[0] - 0.5 * row[i] * q[i])
    acc += 0.5 * kernel.delta_coeff * q[i]
    return complex(acc)


def closed_form_two_state(h_prime: complex, coupling: complex,
                          t) -> np.ndarray:
    """Closed solution of p'' + h' p' - g p = 0, p(0) = 1, p'(0) = 0.

    h_prime is the (purely imaginary, in the Hermitian case) detuning
    between the target phase rate and the complement eigenvalue; coupling
    is the scalar kernel amplitude g = R*W. The two characteristic roots
    are (-h' +- Delta)/2 with Delta = sqrt(h'^2 + 4g); the degenerate
    Delta = 0 case takes the confluent limit (1 + h' t / 2) exp(-h' t / 2).

    Validated against direct two-state propagation; the branch of the
    square root is irrelevant (the expression is symmetric under
    Delta -> -Delta).
    """
    t = np.asarray(t, dtype=float)
    hp = complex(h_prime)
    g = complex(coupling)
    disc = hp * hp + 4.0 * g
    delta = np.sqrt(complex(disc))
    if abs(delta) < 1e-14 * max(1.0, abs(hp)):
        return (1.0 + 0.5 * hp * t) * np.exp(-0.5 * hp * t)
    c_minus = (-hp + delta) / (2.0 * delta)
    c_plus = (hp + delta) / (2.0 * delta)
    return (c_minus * np.exp(0.5 * (-hp - delta) * t)
            + c_plus * np.exp(0.5 * (-hp + delta) * t))

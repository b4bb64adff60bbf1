"""Propagation of linear systems, frame rotation, time-ordered exponentials."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .generators import Generator
from .grids import TimeGrid

UNITARY_ATOL = 1e-10


def _rk4_step(m_of_t, t: float, x: np.ndarray, h: float) -> np.ndarray:
    # classic RK4 with midpoint sampling of M(t)
    m0 = m_of_t(t)
    mh = m_of_t(t + 0.5 * h)
    m1 = m_of_t(t + h)
    k1 = m0 @ x
    k2 = mh @ (x + 0.5 * h * k1)
    k3 = mh @ (x + 0.5 * h * k2)
    k4 = m1 @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _interior_eval(fn, a: float, b: float):
    """Wrap a matrix function so stage times stay inside the piece (a, b).

    Substep plans split steps exactly at pulse-window edges, and windows
    are half-open, so an RK4 stage landing on a piece boundary would read
    the neighboring window's value. Nudging samples inward by 1e-9 of the
    piece width keeps every stage on this piece's side of both edges at a
    negligible perturbation of the smooth part.
    """
    d = 1e-9 * (b - a)
    lo, hi = a + d, b - d

    def wrapped(t: float):
        return fn(min(max(t, lo), hi))

    return wrapped


def propagate(gen: Generator, x0: np.ndarray, grid: TimeGrid,
              plan=None) -> np.ndarray:
    """Integrate dX/dt = M(t) X over the grid with fixed-step RK4.

    Parameters
    ----------
    gen : Generator
        The matrix function M(t).
    x0 : array, shape (dim,)
        Initial state at grid.t0.
    grid : TimeGrid
    plan : optional substep plan (see qleak.pulses.plan_steps). When given,
        each grid step is split at pulse edges and refined so that fast
        control phases stay resolved.

    Returns
    -------
    array, shape (grid.n_nodes, dim), X at every node. X[0] = x0.
    """
    x0 = np.asarray(x0, dtype=complex)
    if x0.shape != (gen.dim,):
        raise ValueError(f"x0 shape {x0.shape} does not match generator dim {gen.dim}")
    out = np.empty((grid.n_nodes, gen.dim), dtype=complex)
    out[0] = x0
    x = x0
    for k in range(grid.n_steps):
        if plan is None:
            x = _rk4_step(gen, grid.time_at(k), x, grid.dt)
        else:
            for a, b, nsub in plan.pieces(k):
                fn = _interior_eval(gen, a, b)
                h = (b - a) / nsub
                for q in range(nsub):
                    x = _rk4_step(fn, a + q * h, x, h)
        out[k + 1] = x
    return out


@dataclass
class FramePath:
    """A time-dependent unitary frame U(t) with its derivative.

    ``derivative`` may be an analytic callback; when omitted, a symmetric
    finite difference with step ``fd_step`` is used.
    """

    unitary: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None
    fd_step: float = 1e-6

    def u(self, t: float) -> np.ndarray:
        u = np.asarray(self.unitary(t), dtype=complex)
        n = u.shape[0]
        dev = np.max(np.abs(u @ u.conj().T - np.eye(n)))
        if dev > UNITARY_ATOL:
            raise ValueError(f"frame is not unitary at t={t} (deviation {dev:.3e})")
        return u

    def udot(self, t: float) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(t), dtype=complex)
        e = self.fd_step
        up = np.asarray(self.unitary(t + e), dtype=complex)
        um = np.asarray(self.unitary(t - e), dtype=complex)
        return (up - um) / (2.0 * e)


def rotate_generator(ham: Generator, frame: FramePath,
                     herm_tol: float = 1e-10) -> Generator:
    """Transform a Hamiltonian into the rotating frame of ``frame``.

    Convention: |psi_rot> = U |psi|, H_rot = U H U^dag + i Udot U^dag.
    Input and output are hermitian-flagged generators (M = -iH); the
    rotated Hamiltonian is reachable through .hamiltonian(t).

    The assembled H_rot is checked for Hermiticity to ``herm_tol``
    (relative) and then symmetrized. Frames whose derivative comes from
    finite differences on a grid of spacing dt leave an anti-Hermitian
    residue of order dt^2; pass a matching tolerance for those.
    """
    if not ham.hermitian:
        raise ValueError("rotate_generator requires a hermitian-flagged generator")

    def h_rot(t: float) -> np.ndarray:
        u = frame.u(t)
        du = frame.udot(t)
        a = u @ ham.hamiltonian(t) @ u.conj().T + 1j * (du @ u.conj().T)
        dev = np.max(np.abs(a - a.conj().T))
        if dev > herm_tol * max(1.0, float(np.max(np.abs(a)))):
            raise ValueError(
                f"rotated Hamiltonian is not Hermitian at t={t} (deviation {dev:.3e})"
            )
        return 0.5 * (a + a.conj().T)

    return Generator.from_hamiltonian(ham.dim, h_rot)


def time_ordered_propagator(dblock: Callable[[float], np.ndarray],
                            s: float, t: float, grid: TimeGrid,
                            scheme: str = "rk4") -> np.ndarray:
    """Time-ordered exponential G(t, s) of dG/dt' = D(t') G, G(s, s) = I.

    Both s and t must be grid nodes with s <= t. Schemes:

    - "rk4": per-step classical RK4 applied to the matrix equation (default)
    - "magnus2": midpoint exponential per step, expm(D(mid) dt)
    - "magnus4": fourth-order two-node Magnus exponential per step

    The two Magnus variants exist as independent cross-checks of the RK4
    product; all three agree to scheme order.
    """
    i = grid.index_of(s)
    j = grid.index_of(t)
    if i > j:
        raise ValueError(f"require s <= t, got s={s} > t={t}")
    d0 = np.asarray(dblock(grid.time_at(i)), dtype=complex)
    n = d0.shape[0]
    g = np.eye(n, dtype=complex)
    h = grid.dt
    for k in range(i, j):
        tk = grid.time_at(k)
        if scheme == "rk4":
            g = _rk4_step(lambda tt: np.asarray(dblock(tt), dtype=complex), tk, g, h)
        elif scheme == "magnus2":
            g = expm(np.asarray(dblock(tk + 0.5 * h), dtype=complex) * h) @ g
        elif scheme == "magnus4":
            # Gauss-Legendre nodes 1/2 +- sqrt(3)/6
            c = np.sqrt(3.0) / 6.0
            a1 = np.asarray(dblock(tk + (0.5 - c) * h), dtype=complex)
            a2 = np.asarray(dblock(tk + (0.5 + c) * h), dtype=complex)
            omega = 0.5 * h * (a1 + a2) + (np.sqrt(3.0) * h * h / 12.0) * (a2 @ a1 - a1 @ a2)
            g = expm(omega) @ g
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return g

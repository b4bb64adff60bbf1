"""Instantaneous-eigenbasis frames for slowly driven Hamiltonians.

The pipeline is: diagonalize H(t) on a grid, fix gauges and dynamical
phases, then either build the frame-rotated generator directly from
matrix elements or hand a two-level problem to the memory-kernel solver.

Everything here evaluates on grid nodes only. For RK4 propagation (which
samples step midpoints) build the path on a half-step grid so midpoints
land on nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.linalg import eigh
from scipy.integrate import cumulative_trapezoid

from .generators import Generator
from .grids import TimeGrid
from .kernels import MemoryKernel, PhaseAccumulator
from .propagators import FramePath
from .pulses import PulseSequence, pulse_value

# below this fraction of overlap between consecutive eigenvectors the
# ascending-order identification of levels is no longer trustworthy
TRACKING_OVERLAP_MIN = 0.5

NODE_RTOL = 1e-9


@dataclass(frozen=True)
class EigenPath:
    """Eigendecomposition of H(t) tracked along a grid.

    states[k, :, j] is the j-th eigenvector at node k (ascending energy
    order), gauge-fixed so consecutive overlaps are real positive.
    phases[k, j] is the accumulated dynamical phase integral of E_j from
    t0. derivs holds d|E_j>/dt by central differences on the grid.
    """

    grid: TimeGrid
    energies: np.ndarray
    states: np.ndarray
    phases: np.ndarray
    derivs: np.ndarray

    @property
    def n_levels(self) -> int:
        return self.energies.shape[1]

    def node_index(self, t: float) -> int:
        k = int(round((t - self.grid.t0) / self.grid.dt))
        if k < 0 or k >= self.grid.n_nodes or \
                abs(self.grid.time_at(k) - t) > NODE_RTOL * max(1.0, abs(t)):
            raise ValueError(
                f"t={t!r} is not a node of the tracking grid; adiabatic "
                "quantities evaluate on nodes only (build the path on a "
                "half-step grid for RK4 propagation)"
            )
        return k


def track_eigenpath(ham: Generator, grid: TimeGrid,
                    gap_threshold: Optional[float] = None) -> EigenPath:
    """Diagonalize H(t) on every grid node and track levels continuously.

    Levels are sorted ascending at t0 and stay in ascending order (a
    crossing would need a vanishing gap, which is refused). The gauge
    makes <E_j(t_k) | E_j(t_{k+1})> real positive, which also drives the
    diagonal derivative couplings <E_j | dE_j/dt> to zero numerically.

    gap_threshold defaults to 1e-6 times the largest |E| on the path;
    any adjacent-level gap below it raises with the offending time.
    """
    if not ham.hermitian:
        raise ValueError("track_eigenpath requires a hermitian-flagged generator")
    n = ham.dim
    nn = grid.n_nodes
    energies = np.empty((nn, n), dtype=float)
    states = np.empty((nn, n, n), dtype=complex)
    for k in range(nn):
        w, v = eigh(ham.hamiltonian(grid.time_at(k)))
        if k == 0:
            # deterministic initial gauge: largest component real positive
            for j in range(n):
                lead = v[np.argmax(np.abs(v[:, j])), j]
                v[:, j] *= np.conj(lead) / abs(lead)
        else:
            for j in range(n):
                ov = complex(states[k - 1, :, j].conj() @ v[:, j])
                if abs(ov) < TRACKING_OVERLAP_MIN:
                    raise ValueError(
                        f"eigenstate tracking lost for level {j} near "
                        f"t={grid.time_at(k)!r} (overlap {abs(ov):.3f}); "
                        "refine the grid, or check for a level crossing "
                        "(vanishing gap) near this time"
                    )
                v[:, j] *= np.conj(ov) / abs(ov)
        energies[k] = w
        states[k] = v

    threshold = gap_threshold
    if threshold is None:
        threshold = 1e-6 * float(np.max(np.abs(energies)))
    if n > 1:
        gaps = np.diff(energies, axis=1)
        k_min, j_min = np.unravel_index(np.argmin(gaps), gaps.shape)
        if gaps[k_min, j_min] < threshold:
            raise ValueError(
                f"levels {j_min} and {j_min + 1} come within "
                f"{gaps[k_min, j_min]:.3e} (< threshold {threshold:.3e}) at "
                f"t={grid.time_at(int(k_min))!r}; treat as a crossing"
            )

    phases = cumulative_trapezoid(energies, dx=grid.dt, axis=0, initial=0.0)
    derivs = np.empty_like(states)
    derivs[1:-1] = (states[2:] - states[:-2]) / (2.0 * grid.dt)
    # second-order one-sided stencils keep the endpoint error at dt^2
    derivs[0] = (-3.0 * states[0] + 4.0 * states[1] - states[2]) / (2.0 * grid.dt)
    derivs[-1] = (3.0 * states[-1] - 4.0 * states[-2] + states[-3]) / (2.0 * grid.dt)
    return EigenPath(grid=grid, energies=energies, states=states,
                     phases=phases, derivs=derivs)


def adiabatic_generator(path: EigenPath,
                        hdot: Optional[Callable[[float], np.ndarray]] = None
                        ) -> Generator:
    """Generator of the state in the frame co-rotating with the eigenbasis.

    Row a, column b (a != b):

        M_ab = -exp(i (phase_a - phase_b)) <E_a | dH/dt | E_b> / (E_b - E_a)

    with the diagonal -<E_a | dE_a/dt> (zero up to gauge noise). When no
    analytic ``hdot`` callback is given the off-diagonal matrix elements
    use the tracked state derivatives <E_a | dE_b/dt> instead, which is
    the same quantity through the eigenvalue identity.
    """
    n = path.n_levels

    def eval_fn(t: float) -> np.ndarray:
        k = path.node_index(t)
        v = path.states[k]
        dv = path.derivs[k]
        en = path.energies[k]
        ph = np.exp(1j * path.phases[k])
        if hdot is None:
            elems = v.conj().T @ dv
        else:
            a = v.conj().T @ np.asarray(hdot(t), dtype=complex) @ v
            denom = en[None, :] - en[:, None]
            np.fill_diagonal(denom, 1.0)
            elems = a / denom
            np.fill_diagonal(elems, np.diagonal(v.conj().T @ dv))
        return -(ph[:, None] / ph[None, :]) * elems

    return Generator(n, eval_fn)


def adiabatic_frame(path: EigenPath) -> FramePath:
    """The unitary frame behind :func:`adiabatic_generator`.

    U(t) maps |E_n(t)> to exp(i phase_n(t)) times the n-th coordinate
    vector, so components of the rotated state are level amplitudes and
    rotating a lab Hamiltonian with this frame reproduces the adiabatic
    generator entry for entry. The derivative is assembled from the path
    data (energies and state derivatives), not finite-differenced from U.
    """

    def u_fn(t: float) -> np.ndarray:
        k = path.node_index(t)
        coeff = np.exp(1j * path.phases[k])
        return coeff[:, None] * path.states[k].conj().T

    def du_fn(t: float) -> np.ndarray:
        k = path.node_index(t)
        coeff = np.exp(1j * path.phases[k])
        term1 = (1j * path.energies[k] * coeff)[:, None] \
            * path.states[k].conj().T
        term2 = coeff[:, None] * path.derivs[k].conj().T
        return term1 + term2

    return FramePath(unitary=u_fn, derivative=du_fn)


def two_level_kernel(path: EigenPath
                     ) -> Tuple[MemoryKernel, PhaseAccumulator]:
    """Memory kernel and phase of the excited level seen from the ground one.

    For a two-level path the co-rotating generator has scalar blocks; the
    separable product of its off-diagonals with the excited-level decay
    gives the kernel on the tracking grid, ready for the Volterra solver.
    The kernel oscillates at the accumulated gap phase.
    """
    if path.n_levels != 2:
        raise ValueError(f"two_level_kernel needs 2 levels, got {path.n_levels}")
    grid = path.grid
    nn = grid.n_nodes
    v, dv = path.states, path.derivs
    # scalar blocks of the co-rotating generator, nodewise
    dphase = path.phases[:, 0] - path.phases[:, 1]
    r = -np.exp(1j * dphase) * np.einsum("ki,ki->k", v[:, :, 0].conj(), dv[:, :, 1])
    w = -np.exp(-1j * dphase) * np.einsum("ki,ki->k", v[:, :, 1].conj(), dv[:, :, 0])
    d = -np.einsum("ki,ki->k", v[:, :, 1].conj(), dv[:, :, 1])
    h = -np.einsum("ki,ki->k", v[:, :, 0].conj(), dv[:, :, 0])

    # g(t, s) = R(t) exp(int_s^t D) W(s) splits into a(t) * b(s)
    y = np.concatenate(([0.0], np.cumsum(0.5 * grid.dt * (d[1:] + d[:-1]))))
    a = r * np.exp(y)
    b = w * np.exp(-y)

    def row(i: int) -> np.ndarray:
        return a[i] * b[:i + 1]

    kernel = MemoryKernel(grid, row)

    c = np.empty(nn, dtype=complex)
    c[0] = 0.0
    np.cumsum(0.5 * grid.dt * (h[1:] + h[:-1]), out=c[1:])
    phase = PhaseAccumulator(grid=grid, h_values=h, C=1j * c)
    return kernel, phase


def scaled_control(ham: Generator, pulses: PulseSequence) -> Generator:
    """Hamiltonian rescaled in place by the pulse train, H -> (1 + c(t)) H.

    Control that multiplies the whole Hamiltonian leaves its eigenvectors
    alone and scales every energy, so in the co-rotating frame only the
    phases move. Propagate with a substep plan matched to |c| times the
    spectral scale.
    """
    def h_fn(t: float) -> np.ndarray:
        return (1.0 + pulse_value(pulses, t)) * ham.hamiltonian(t)

    return Generator.from_hamiltonian(ham.dim, h_fn)


def lab_frame_leo(path: EigenPath, pulses: PulseSequence, t: float) -> np.ndarray:
    """The pulsed parity operator along the tracked ground state, in the lab.

    Equals c(t) * (2 |E_0(t)><E_0(t)| - I); conjugating it into the
    adiabatic frame gives the fixed-target rotating-frame operator.
    """
    k = path.node_index(t)
    ground = path.states[k, :, 0]
    c = pulse_value(pulses, t)
    return c * (2.0 * np.outer(ground, ground.conj())
                - np.eye(path.n_levels))

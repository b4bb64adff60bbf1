"""Central spin coupled to a nuclear bath, reduced to one component.

In the single-excitation sector the model is an (N+1)-level linear
system: the first basis state carries the excitation on the central
spin, the remaining N states carry it on one bath spin each. Without
intra-bath coupling the complement block is diagonal, so the memory
kernel is a sum of N exponentials and can be written down analytically
instead of time-ordering the complement propagator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .generators import Generator
from .grids import TimeGrid
from .kernels import MemoryKernel, PhaseAccumulator, phase_integral
from .pulses import PulseSequence, pulse_value

ScalarOrFn = Union[float, Callable[[float], float]]
VectorOrFn = Union[np.ndarray, Callable[[float], np.ndarray]]

# symmetry tolerance for intra-bath coupling matrices
BATH_SYMMETRY_ATOL = 1e-12


def _scalar_fn(value: ScalarOrFn) -> Callable[[float], float]:
    if callable(value):
        return value
    v = float(value)
    return lambda t: v


def _vector_fn(value: VectorOrFn, n: int, name: str) -> Callable[[float], np.ndarray]:
    if callable(value):
        return value
    v = np.asarray(value, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {v.shape}")
    return lambda t: v


def _check_bath_matrix(m: Optional[np.ndarray], n: int, name: str) -> Optional[np.ndarray]:
    if m is None:
        return None
    m = np.asarray(m, dtype=float)
    if m.shape != (n, n):
        raise ValueError(f"{name} must have shape ({n}, {n}), got {m.shape}")
    if not np.allclose(m, m.T, atol=BATH_SYMMETRY_ATOL):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.abs(np.diag(m)) > BATH_SYMMETRY_ATOL):
        raise ValueError(f"{name} must have zero diagonal")
    return m


@dataclass(eq=False)
class SpinBathSpec:
    """Couplings of one central spin to N bath spins.

    splitting is the central energy splitting (scalar or function of t).
    bath_freqs are the N bath precession frequencies. longitudinal and
    transverse are the per-spin couplings to the central spin, each a
    length-N array or a function of t returning one. The transverse
    value is the sum of the two in-plane components. bath_longitudinal
    and bath_transverse optionally couple bath spins to each other;
    both must be symmetric with zero diagonal, and bath_transverse
    likewise holds the summed in-plane pair couplings.
    """

    splitting: ScalarOrFn
    bath_freqs: np.ndarray
    longitudinal: VectorOrFn
    transverse: VectorOrFn
    bath_longitudinal: Optional[np.ndarray] = None
    bath_transverse: Optional[np.ndarray] = None

    splitting_at: Callable[[float], float] = field(init=False, repr=False)
    longitudinal_at: Callable[[float], np.ndarray] = field(init=False, repr=False)
    transverse_at: Callable[[float], np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.bath_freqs = np.asarray(self.bath_freqs, dtype=float)
        if self.bath_freqs.ndim != 1 or self.bath_freqs.size == 0:
            raise ValueError("bath_freqs must be a nonempty 1-d array")
        n = self.n_bath
        self.splitting_at = _scalar_fn(self.splitting)
        self.longitudinal_at = _vector_fn(self.longitudinal, n, "longitudinal")
        self.transverse_at = _vector_fn(self.transverse, n, "transverse")
        self.bath_longitudinal = _check_bath_matrix(
            self.bath_longitudinal, n, "bath_longitudinal")
        self.bath_transverse = _check_bath_matrix(
            self.bath_transverse, n, "bath_transverse")

    @property
    def n_bath(self) -> int:
        return self.bath_freqs.size

    @property
    def has_bath_coupling(self) -> bool:
        return self.bath_longitudinal is not None or self.bath_transverse is not None

    def target(self) -> np.ndarray:
        """The retained direction: excitation on the central spin."""
        v = np.zeros(self.n_bath + 1, dtype=complex)
        v[0] = 1.0
        return v


def spin_bath_generator(spec: SpinBathSpec,
                        pulses: Optional[PulseSequence] = None) -> Generator:
    """Full (N+1)-level generator of the single-excitation dynamics.

    The underlying Hamiltonian has the central splitting (shifted by
    half the summed longitudinal couplings) in the corner, transverse
    couplings along the first row and column, and bath frequencies
    (each shifted by its own half longitudinal coupling) on the rest of
    the diagonal. Intra-bath couplings, when present, shift the bath
    diagonal by half the summed longitudinal pair couplings and fill
    the bath-bath off-diagonal with the transverse pair couplings.

    pulses, when given, drive the central splitting additively.
    """
    n = spec.n_bath
    bl = spec.bath_longitudinal
    bt = spec.bath_transverse
    # static intra-bath contribution, built once
    bath_static = np.zeros((n, n))
    if bl is not None:
        bath_static -= 0.5 * np.diag(bl.sum(axis=1))
    if bt is not None:
        bath_static += bt

    def ham(t: float) -> np.ndarray:
        jz = spec.longitudinal_at(t)
        jp = spec.transverse_at(t)
        omega = spec.splitting_at(t)
        if pulses is not None:
            omega = omega + pulse_value(pulses, t)
        h = np.zeros((n + 1, n + 1), dtype=complex)
        h[0, 0] = omega - 0.5 * jz.sum()
        h[0, 1:] = jp
        h[1:, 0] = jp
        h[1:, 1:] = np.diag(spec.bath_freqs - 0.5 * jz) + bath_static
        return h

    return Generator.from_hamiltonian(n + 1, ham)


def spin_bath_kernel(spec: SpinBathSpec, grid: TimeGrid,
                     pulses: Optional[PulseSequence] = None,
                     ) -> Tuple[MemoryKernel, PhaseAccumulator]:
    """Analytic memory kernel and phase for the bath-decoupled model.

    With a diagonal complement block the kernel separates per bath spin:

        g(t, s) = -sum_n q_n(t) conj(q_n(s)),
        q_n(t) = transverse_n(t) * exp(-i w_n t + (i/2) Y_n(t)),

    where Y_n is the running integral of the longitudinal coupling.
    The overall minus sign and the i in the longitudinal term come from
    building the kernel out of the generator blocks (each coupling
    carries a factor -i, and the complement evolves by -i times its
    Hamiltonian); this form matches kernel_from_blocks to round-off.

    The phase accumulator integrates the corner element, with pulse
    areas (driving the splitting) resolved exactly.

    Intra-bath coupling breaks the separable form; use
    kernel_from_blocks on spin_bath_generator instead.
    """
    if spec.has_bath_coupling:
        raise ValueError(
            "analytic kernel requires zero intra-bath coupling; "
            "use kernel_from_blocks(spin_bath_generator(spec)) instead")
    times = grid.times()
    nn = grid.n_nodes
    jz = np.empty((nn, spec.n_bath))
    jp = np.empty((nn, spec.n_bath))
    for k, t in enumerate(times):
        jz[k] = spec.longitudinal_at(t)
        jp[k] = spec.transverse_at(t)
    y = cumulative_trapezoid(jz, dx=grid.dt, axis=0, initial=0.0)
    # q[k, n] = transverse_n(t_k) * exp(-i w_n t_k + i Y_n(t_k) / 2)
    q = jp * np.exp(1j * (0.5 * y - np.outer(times, spec.bath_freqs)))

    def row(i: int) -> np.ndarray:
        return -(q[:i + 1].conj() @ q[i])

    kernel = MemoryKernel(grid, row)

    def corner(t: float) -> complex:
        return -1j * (spec.splitting_at(t) - 0.5 * spec.longitudinal_at(t).sum())

    phase = phase_integral(corner, grid, pulses=pulses)
    return kernel, phase

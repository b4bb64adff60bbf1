"""qleak: leakage-free-path engineering for linear and quantum dynamics.

The library reduces any linear system dX/dt = M(t) X to an exact
one-component Volterra equation for the amplitude along a target
direction, and implements the pulse-control protocols that keep that
amplitude from leaking: accumulated-phase (memory-kernel) control,
leakage elimination operators, parity kicks, Zeno projection, adiabatic
frames, a central-spin bath model, and a stochastic multilevel model
with colored noise.
"""

from .grids import TimeGrid
from .generators import Generator
from .propagators import FramePath, propagate, rotate_generator, time_ordered_propagator
from .partition import PQBlocks, complete_basis, pq_partition
from .pulses import (PulseSequence, StepPlan, cumulative_areas, kick_times,
                     phase_area, pulse_value, window_level)
from .kernels import (MemoryKernel, PhaseAccumulator, kernel_from_blocks,
                      phase_integral)
from .volterra import (AmplitudeSeries, closed_form_two_state,
                       leakage_integral, solve_p)
from .control import (LEOSpec, ZenoResult, apply_leo, block_offdiag_norm,
                      leo_matrix, parity_kick_propagator, rotating_leo,
                      zeno_protocol, zeno_step)
from .adiabatic import (EigenPath, adiabatic_frame, adiabatic_generator,
                        lab_frame_leo, scaled_control, track_eigenpath,
                        two_level_kernel)
from .spinbath import SpinBathSpec, spin_bath_generator, spin_bath_kernel
from .qsd import (FidelitySeries, NoisePath, QSDCoefficients, QSDSpec,
                  qsd_coefficients, qsd_fidelity_closed, qsd_fidelity_mc,
                  qsd_fidelity_semianalytic, qsd_mc_samples, qsd_trajectory,
                  sample_colored_noise)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid", "Generator", "FramePath", "propagate", "rotate_generator",
    "time_ordered_propagator", "PQBlocks", "complete_basis", "pq_partition",
    "PulseSequence", "StepPlan", "cumulative_areas", "kick_times",
    "phase_area", "pulse_value", "window_level",
    "MemoryKernel", "PhaseAccumulator", "kernel_from_blocks", "phase_integral",
    "AmplitudeSeries", "closed_form_two_state", "leakage_integral", "solve_p",
    "LEOSpec", "ZenoResult", "apply_leo", "block_offdiag_norm", "leo_matrix",
    "parity_kick_propagator", "rotating_leo", "zeno_protocol", "zeno_step",
    "EigenPath", "adiabatic_frame", "adiabatic_generator", "lab_frame_leo",
    "scaled_control", "track_eigenpath", "two_level_kernel",
    "SpinBathSpec", "spin_bath_generator", "spin_bath_kernel",
    "FidelitySeries", "NoisePath", "QSDCoefficients", "QSDSpec",
    "qsd_coefficients", "qsd_fidelity_closed", "qsd_fidelity_mc",
    "qsd_fidelity_semianalytic", "qsd_mc_samples", "qsd_trajectory",
    "sample_colored_noise",
    "__version__",
]

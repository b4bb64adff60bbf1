"""n-level model with a shared decaying-memory noise channel.

Level 0 is the driven level; levels 1..n-1 are leakage destinations fed
from level 0 through one complex Gaussian noise channel with correlation
(gamma/2) exp(-gamma |t - s|). The module provides the deterministic
coefficient functions that close the ensemble dynamics, a population-only
closed-form survival fidelity, an exact second-moment ensemble fidelity,
colored-noise sampling, single-realization propagation, and a Monte Carlo
fidelity estimator.

The linear (unnormalized) stochastic state is triangular: once the
coefficient functions are known the level-0 amplitude is deterministic,
and each leakage amplitude is a single integral of noise against it.
Propagation therefore reduces to quadrature. Control pulses shift the
level-0 energy; their phase, linear in time inside each window, is
integrated exactly per grid interval, so arbitrarily strong pulse levels
cost no accuracy as long as window edges land on grid nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grids import TimeGrid
from .pulses import PulseSequence, StepPlan, cumulative_areas, pulse_value

VectorOrFn = Union[Sequence[float], np.ndarray, Callable[[float], np.ndarray]]

# normalization tolerance for the tracked state
TARGET_NORM_ATOL = 1e-10

# pulse window edges must sit on grid nodes within this fraction of dt
EDGE_ALIGN_RTOL = 1e-9


@dataclass(eq=False)
class QSDSpec:
    """n levels, one shared noise channel into levels 1..n-1, and a target.

    energies holds E_j as a length-n array or a function of time returning
    one; entry 0 is the driven level. couplings holds the channel weights
    for levels 1..n-1 (level 0 carries none). gamma is the memory decay
    rate of the noise correlation (gamma/2) exp(-gamma |t - s|).
    target_amps is the state whose survival is tracked.
    """

    energies: VectorOrFn
    couplings: Union[Sequence[complex], np.ndarray]
    gamma: float
    target_amps: Union[Sequence[complex], np.ndarray]

    energies_at: Callable[[float], np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.target_amps = np.asarray(self.target_amps, dtype=complex)
        if self.target_amps.ndim != 1 or self.target_amps.size < 2:
            raise ValueError("target_amps must be a 1-d array of length >= 2")
        n = self.n_levels
        self.couplings = np.asarray(self.couplings, dtype=complex)
        if self.couplings.shape != (n - 1,):
            raise ValueError(
                f"couplings must have shape ({n - 1},) for {n} levels, "
                f"got {self.couplings.shape}")
        self.gamma = float(self.gamma)
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        norm_err = abs(np.sum(np.abs(self.target_amps) ** 2) - 1.0)
        if norm_err > TARGET_NORM_ATOL:
            raise ValueError(
                f"target amplitudes must be normalized; |sum - 1| = "
                f"{norm_err:.3e} exceeds {TARGET_NORM_ATOL}")
        if callable(self.energies):
            self.energies_at = self.energies
        else:
            ev = np.asarray(self.energies, dtype=float)
            if ev.shape != (n,):
                raise ValueError(
                    f"energies must have shape ({n},), got {ev.shape}")
            self.energies = ev
            self.energies_at = lambda t: ev

    @property
    def n_levels(self) -> int:
        return self.target_amps.size


@dataclass(frozen=True)
class QSDCoefficients:
    """Coefficient functions and their running time integrals on a grid.

    F has shape (n_nodes, n-1); column j-1 belongs to level j. Fbar is the
    cumulative integral of F, so the ensemble damping exponent of the
    level-0 amplitude is Fbar @ conj(couplings).
    """

    grid: TimeGrid
    F: np.ndarray
    Fbar: np.ndarray

    def __post_init__(self):
        want = (self.grid.n_nodes, self.F.shape[1] if self.F.ndim == 2 else -1)
        if self.F.ndim != 2 or self.F.shape != want or self.Fbar.shape != want:
            raise ValueError(
                f"F and Fbar must both have shape (n_nodes, n-1), got "
                f"{self.F.shape} and {self.Fbar.shape} on {self.grid.n_nodes} "
                f"nodes")
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.Fbar))):
            raise ValueError("coefficient series contain non-finite values")
        if np.any(np.abs(self.F[0]) > 1e-12) or np.any(np.abs(self.Fbar[0]) > 1e-12):
            raise ValueError("coefficients must vanish at the initial time")


@dataclass(frozen=True)
class NoisePath:
    """One sampled conjugate noise path z*(t) on a grid."""

    grid: TimeGrid
    z_star: np.ndarray
    seed: Union[int, Tuple[int, ...]]

    def __post_init__(self):
        if self.z_star.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"z_star must have shape ({self.grid.n_nodes},), got "
                f"{self.z_star.shape}")
        if not np.all(np.isfinite(self.z_star)):
            raise ValueError("noise path contains non-finite values")


@dataclass(frozen=True)
class FidelitySeries:
    """Survival fidelity on a time axis with per-node standard error.

    Deterministic sources carry stderr = 0. Bounds are checked by
    validate(), not the constructor: approximate closed forms may wander
    slightly outside [0, 1] and that is a finding, not a crash.
    """

    t: np.ndarray
    F: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        if not (self.t.shape == self.F.shape == self.stderr.shape
                and self.t.ndim == 1):
            raise ValueError(
                f"t, F and stderr must be equal-length 1-d arrays, got "
                f"{self.t.shape}, {self.F.shape}, {self.stderr.shape}")
        if np.iscomplexobj(self.F) or np.iscomplexobj(self.stderr):
            raise ValueError("fidelity and stderr must be real arrays")
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.stderr))):
            raise ValueError("fidelity series contains non-finite values")

    def validate(self, n_sigma: float = 3.0, atol: float = 1e-9) -> "FidelitySeries":
        """Check 0 <= F <= 1 + n_sigma * stderr, returning self."""
        hi = 1.0 + n_sigma * self.stderr + atol
        bad = (self.F < -atol) | (self.F > hi)
        if np.any(bad):
            k = int(np.argmax(np.where(bad, np.maximum(-self.F, self.F - hi),
                                       -np.inf)))
            raise ValueError(
                f"fidelity out of bounds at t={self.t[k]:.6g}: "
                f"F={self.F[k]:.6g} with stderr={self.stderr[k]:.3g}")
        return self


def _require_same_grid(other: TimeGrid, grid: TimeGrid, what: str) -> None:
    if other is grid:
        return
    if other.n_nodes != grid.n_nodes or not np.allclose(other.times(),
                                                        grid.times()):
        raise ValueError(f"{what} grid does not match "
                         f"({other.n_nodes} vs {grid.n_nodes} nodes)")


def _check_pulses(grid: TimeGrid, pulses: Optional[PulseSequence],
                  align: bool) -> None:
    """Reject pulse shapes the quadrature cannot represent.

    Delta kicks never enter the level-0 energy. With align=True every
    window edge inside the grid span must land on a node, which makes the
    level exactly constant on each interval.
    """
    if pulses is None:
        return
    if pulses.kind == "ideal_delta":
        raise ValueError("delta kicks are not supported for level-energy "
                         "control; use a rectangular pulse kind")
    if not align or not pulses.is_rect or pulses.strength == 0.0:
        return
    m_lo = max(1, int(np.floor(grid.t0 / pulses.period)) + 1)
    m_hi = int(np.floor(grid.t1 / pulses.period)) + 1
    for m in range(m_lo, m_hi + 1):
        for edge in (m * pulses.period - pulses.duration, m * pulses.period):
            if edge <= grid.t0 or edge >= grid.t1:
                continue
            k = round((edge - grid.t0) / grid.dt)
            if abs(grid.t0 + k * grid.dt - edge) > EDGE_ALIGN_RTOL * grid.dt:
                raise ValueError(
                    f"pulse window edge at t={edge:.9g} is not a grid node; "
                    f"choose dt so that period {pulses.period} and duration "
                    f"{pulses.duration} are integer multiples of it")


def sample_colored_noise(gamma: float, grid: TimeGrid,
                         seed: Union[int, Tuple[int, ...]] = 0) -> NoisePath:
    """Stationary complex noise with covariance (gamma/2) e^{-gamma |t-s|}.

    First-order autoregressive sampling with exact one-step transitions,
    initialized from the stationary distribution, so the path statistics
    are independent of dt. The process is circular: M[z z] = 0.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    rng = np.random.default_rng(seed)
    e = _complex_normals(rng, grid.n_nodes)
    z = _ar1_scan(gamma, grid.dt, e)
    return NoisePath(grid=grid, z_star=z, seed=seed)


def _complex_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    d = rng.standard_normal((n, 2))
    return d[:, 0] + 1j * d[:, 1]


def _ar1_scan(gamma: float, dt: float, e: np.ndarray) -> np.ndarray:
    """Run the exact autoregressive recursion along the last axis of e."""
    rho = np.exp(-gamma * dt)
    s_init = np.sqrt(gamma / 4.0)
    s_step = np.sqrt((gamma / 4.0) * (1.0 - rho * rho))
    z = np.empty_like(e)
    z[..., 0] = s_init * e[..., 0]
    for k in range(1, e.shape[-1]):
        z[..., k] = rho * z[..., k - 1] + s_step * e[..., k]
    return z


def qsd_coefficients(spec: QSDSpec, grid: TimeGrid,
                     pulses: Optional[PulseSequence] = None) -> QSDCoefficients:
    """Solve the closed coefficient ODE and accumulate running integrals.

    dF_j/dt = (gamma/2) kappa_j - gamma F_j
              + [i(E_0(t) + c(t) - E_j(t)) + sum_k conj(kappa_k) F_k] F_j

    with F_j(0) = 0, where c is the pulse level on the driven level.
    Within each plan piece the level is constant and the stepper
    subdivides so the control phase per substep stays small; the running
    integral is accumulated at substep resolution.
    """
    _check_pulses(grid, pulses, align=False)
    kap = spec.couplings
    kapc = kap.conj()
    gamma = spec.gamma
    src = 0.5 * gamma * kap
    e0 = np.asarray(spec.energies_at(grid.t0), dtype=float)
    if e0.shape != (spec.n_levels,):
        raise ValueError(f"energies function must return shape "
                         f"({spec.n_levels},), got {e0.shape}")

    def rhs(t, fv, level):
        e = np.asarray(spec.energies_at(t), dtype=float)
        drift = 1j * (e[0] + level - e[1:]) - gamma + kapc @ fv
        return src + drift * fv

    plan = StepPlan(grid, pulses)
    nj = kap.size
    F = np.zeros((grid.n_nodes, nj), dtype=complex)
    Fbar = np.zeros((grid.n_nodes, nj), dtype=complex)
    f = np.zeros(nj, dtype=complex)
    fbar = np.zeros(nj, dtype=complex)
    for k in range(grid.n_steps):
        for a, b, nsub in plan.pieces(k):
            level = pulse_value(pulses, 0.5 * (a + b)) if pulses else 0.0
            h = (b - a) / nsub
            for m in range(nsub):
                t = a + m * h
                k1 = rhs(t, f, level)
                k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1, level)
                k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2, level)
                k4 = rhs(t + h, f + h * k3, level)
                f_new = f + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                fbar = fbar + (0.5 * h) * (f + f_new)
                f = f_new
        F[k + 1] = f
        Fbar[k + 1] = fbar
    return QSDCoefficients(grid=grid, F=F, Fbar=Fbar)


def qsd_fidelity_closed(spec: QSDSpec,
                        coeffs: QSDCoefficients) -> FidelitySeries:
    """Population-only closed-form survival fidelity.

    Four terms driven by the coefficient functions: the damped level-0
    population squared, the leakage-leakage cross populations, the
    level-0 cross terms with half-damping, and a memory integral of
    2 Re F_j weighted by the damping, done by grid trapezoid. The curve
    depends on the target only through |a_j|^2.
    """
    pops = np.abs(spec.target_amps) ** 2
    p0 = pops[0]
    pj = pops[1:]
    q = pj.sum()
    sum_fbar = coeffs.Fbar.sum(axis=1)
    damp = np.exp(-2.0 * sum_fbar.real)
    half = np.exp(-sum_fbar)
    t = coeffs.grid.times()
    integrand = p0 * 2.0 * coeffs.F.real * damp[:, None]
    mem = cumulative_trapezoid(integrand, x=t, axis=0, initial=0.0)
    fid = (p0 ** 2 * damp + (q * q - pj @ pj) + 2.0 * p0 * q * half.real
           + pj @ pj + mem @ pj)
    return FidelitySeries(t=t, F=fid, stderr=np.zeros_like(t))


def _exp_moments(mu: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Integrals of e^{mu u} and u e^{mu u} over [0, h], elementwise in mu."""
    mu = np.asarray(mu, dtype=complex)
    small = np.abs(mu) * h < 1e-6
    safe = np.where(small, 1.0, mu)
    emh = np.exp(mu * h)
    n0 = (emh - 1.0) / safe
    n1 = (h * emh - n0) / safe
    mh = mu[small] * h
    n0[small] = h * (1.0 + mh / 2.0 + mh * mh / 6.0)
    n1[small] = h * h * (0.5 + mh / 3.0 + mh * mh / 8.0)
    return n0, n1


def _interval_levels(grid: TimeGrid,
                     pulses: Optional[PulseSequence]) -> np.ndarray:
    """Pulse level on each grid interval (constant there once edges align)."""
    if pulses is None or not pulses.is_rect or pulses.strength == 0.0:
        return np.zeros(grid.n_steps)
    mids = grid.t0 + grid.dt * (np.arange(grid.n_steps) + 0.5)
    return np.array([pulse_value(pulses, tm) for tm in mids])


def _oscillatory_cumint(slow: np.ndarray, theta_c: np.ndarray,
                        levels: np.ndarray, dt: float,
                        sign: float) -> np.ndarray:
    """Cumulative integral of slow(s) * exp(sign * i * theta_c(s)).

    slow is sampled on nodes along the last axis and fitted linearly per
    interval; the pulse phase, linear within each interval, is integrated
    in closed form.
    """
    m0, m1 = _exp_moments(1j * sign * levels, dt)
    g0 = slow[..., :-1]
    g1 = slow[..., 1:]
    phase0 = np.exp(1j * sign * theta_c[:-1])
    inc = phase0 * (g0 * m0 + (g1 - g0) * (m1 / dt))
    out = np.zeros(slow.shape, dtype=complex)
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    return out


@dataclass(frozen=True)
class _EnsembleProfiles:
    """Deterministic node profiles shared by every trajectory."""

    theta: np.ndarray       # (n_nodes, n) smooth level phases, no pulse area
    theta_c: np.ndarray     # (n_nodes,) exact accumulated pulse phase
    levels: np.ndarray      # (n_steps,) pulse level per interval
    damping: np.ndarray     # (n_nodes,) Fbar @ conj(couplings)
    phi_hat: np.ndarray     # (n_nodes, n-1) slow integrand factors
    det_overlap: np.ndarray  # (n_nodes,) deterministic part of <target|psi>


def _ensemble_profiles(spec: QSDSpec, grid: TimeGrid,
                       pulses: Optional[PulseSequence],
                       coeffs: QSDCoefficients) -> _EnsembleProfiles:
    times = grid.times()
    if callable(spec.energies):
        evals = np.array([spec.energies_at(t) for t in times], dtype=float)
        theta = cumulative_trapezoid(evals, x=times, axis=0, initial=0.0)
    else:
        theta = np.outer(times - grid.t0, spec.energies)
    theta_c = cumulative_areas(pulses, times)
    damping = coeffs.Fbar @ spec.couplings.conj()
    phi_hat = np.exp(1j * (theta[:, 1:] - theta[:, :1]) - damping[:, None])
    pops = np.abs(spec.target_amps) ** 2
    det_overlap = pops[0] * np.exp(-damping) + pops[1:].sum()
    return _EnsembleProfiles(theta=theta, theta_c=theta_c,
                             levels=_interval_levels(grid, pulses),
                             damping=damping, phi_hat=phi_hat,
                             det_overlap=det_overlap)


def qsd_trajectory(spec: QSDSpec, noise: NoisePath,
                   pulses: Optional[PulseSequence] = None,
                   grid: Optional[TimeGrid] = None,
                   coeffs: Optional[QSDCoefficients] = None) -> np.ndarray:
    """Propagate one noise realization of the linear stochastic state.

    Returns the lab-frame state on the grid nodes, shape (n_nodes, n).
    The level-0 amplitude is deterministic; each leakage amplitude is the
    integral of noise times the level-0 amplitude, with pulse phase areas
    handled exactly per interval.
    """
    if grid is None:
        grid = noise.grid
    else:
        _require_same_grid(noise.grid, grid, "noise path")
    _check_pulses(grid, pulses, align=True)
    if coeffs is None:
        coeffs = qsd_coefficients(spec, grid, pulses)
    else:
        _require_same_grid(coeffs.grid, grid, "coefficients")
    prof = _ensemble_profiles(spec, grid, pulses, coeffs)
    amps = spec.target_amps
    kap = spec.couplings
    psi = np.empty((grid.n_nodes, spec.n_levels), dtype=complex)
    psi0_slow = amps[0] * np.exp(-1j * prof.theta[:, 0] - prof.damping)
    psi[:, 0] = psi0_slow * np.exp(-1j * prof.theta_c)
    for j in range(1, spec.n_levels):
        integ = amps[0] * prof.phi_hat[:, j - 1] * noise.z_star
        pickup = _oscillatory_cumint(integ, prof.theta_c, prof.levels,
                                     grid.dt, sign=-1.0)
        psi[:, j] = np.exp(-1j * prof.theta[:, j]) * (amps[j]
                                                      + kap[j - 1] * pickup)
    return psi


def _slow_weight(spec: QSDSpec, prof: _EnsembleProfiles) -> np.ndarray:
    # a0 * sum_j conj(a_j) kappa_j phi_hat_j(s): one slow factor for all j
    amps = spec.target_amps
    return amps[0] * (prof.phi_hat @ (amps[1:].conj() * spec.couplings))


def _mc_sample_block(spec: QSDSpec, grid: TimeGrid, prof: _EnsembleProfiles,
                     slow_w: np.ndarray, lo: int, hi: int,
                     seed: int) -> np.ndarray:
    nn = grid.n_nodes
    e = np.empty((hi - lo, nn), dtype=complex)
    for i in range(lo, hi):
        e[i - lo] = _complex_normals(np.random.default_rng((seed, i)), nn)
    z = _ar1_scan(spec.gamma, grid.dt, e)
    pickup = _oscillatory_cumint(slow_w * z, prof.theta_c, prof.levels,
                                 grid.dt, sign=-1.0)
    return np.abs(prof.det_overlap + pickup) ** 2


def qsd_mc_samples(spec: QSDSpec, grid: TimeGrid, lo: int, hi: int,
                   pulses: Optional[PulseSequence] = None,
                   seed: int = 0) -> np.ndarray:
    """Survival samples for trajectory indices lo..hi-1, shape (hi-lo, nodes).

    Sample i depends on (seed, i) alone, so any partition of an index
    range into separate calls returns the same rows; ensembles computed
    in parallel chunks stay deterministic.
    """
    if not 0 <= lo <= hi:
        raise ValueError(f"need 0 <= lo <= hi, got lo={lo}, hi={hi}")
    _check_pulses(grid, pulses, align=True)
    coeffs = qsd_coefficients(spec, grid, pulses)
    prof = _ensemble_profiles(spec, grid, pulses, coeffs)
    return _mc_sample_block(spec, grid, prof, _slow_weight(spec, prof),
                            lo, hi, seed)


def qsd_fidelity_mc(spec: QSDSpec, grid: TimeGrid,
                    pulses: Optional[PulseSequence] = None,
                    n_traj: int = 1000, seed: int = 0,
                    block_size: int = 250) -> FidelitySeries:
    """Monte Carlo survival fidelity over independent noise paths.

    Trajectory i draws its noise from a generator seeded with (seed, i),
    so the estimate is reproducible and independent of block_size. The
    overlap with the co-moving target needs only the coupling-weighted
    sum of leakage pickups, so the cost per trajectory does not grow with
    the level count.
    """
    if n_traj < 2:
        raise ValueError(f"n_traj must be at least 2, got {n_traj}")
    if block_size < 1:
        raise ValueError(f"block_size must be positive, got {block_size}")
    _check_pulses(grid, pulses, align=True)
    coeffs = qsd_coefficients(spec, grid, pulses)
    prof = _ensemble_profiles(spec, grid, pulses, coeffs)
    slow_w = _slow_weight(spec, prof)
    samples = np.empty((n_traj, grid.n_nodes))
    for lo in range(0, n_traj, block_size):
        hi = min(lo + block_size, n_traj)
        samples[lo:hi] = _mc_sample_block(spec, grid, prof, slow_w,
                                          lo, hi, seed)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_traj)
    return FidelitySeries(t=grid.times(), F=mean, stderr=stderr)


def qsd_fidelity_semianalytic(spec: QSDSpec, grid: TimeGrid,
                              pulses: Optional[PulseSequence] = None
                              ) -> FidelitySeries:
    """Exact ensemble fidelity of the linear stochastic model.

    Around its deterministic part the target overlap is Gaussian, so the
    ensemble fidelity is the deterministic overlap squared plus a
    coupling-weighted noise covariance. The covariance is built from
    exponentially filtered integrals of the level profiles with the same
    closed-form pulse-phase handling as the trajectory engine. Serves as
    an independent cross-check for both the closed-form curve and Monte
    Carlo.
    """
    _check_pulses(grid, pulses, align=True)
    coeffs = qsd_coefficients(spec, grid, pulses)
    prof = _ensemble_profiles(spec, grid, pulses, coeffs)
    gamma = spec.gamma
    dt = grid.dt
    nn = grid.n_nodes
    nj = spec.n_levels - 1
    phi0 = prof.phi_hat[:-1]
    phi1 = prof.phi_hat[1:]
    ph_neg = np.exp(-1j * prof.theta_c[:-1])

    # filtered profiles B_j(t) = int_0^t e^{-gamma (t-s)} phi_j(s) ds
    n0b, n1b = _exp_moments(gamma - 1j * prof.levels, dt)
    decay = np.exp(-gamma * dt)
    binc = (decay * ph_neg)[:, None] * (phi0 * n0b[:, None]
                                        + (phi1 - phi0) * (n1b / dt)[:, None])
    B = np.empty((nn, nj), dtype=complex)
    B[0] = 0.0
    for k in range(nn - 1):
        B[k + 1] = decay * B[k] + binc[k]

    # covariance S_jk(t) = int phi_j B_k* + phi_k* B_j, interval by interval
    m0n, m1n = _exp_moments(-1j * prof.levels, dt)
    m0p, m1p = _exp_moments(1j * prof.levels, dt)
    p1 = prof.phi_hat[:, :, None] * B.conj()[:, None, :]
    p2 = prof.phi_hat.conj()[:, None, :] * B[:, :, None]
    inc1 = ph_neg[:, None, None] * (p1[:-1] * m0n[:, None, None]
                                    + np.diff(p1, axis=0)
                                    * (m1n / dt)[:, None, None])
    inc2 = ph_neg.conj()[:, None, None] * (p2[:-1] * m0p[:, None, None]
                                           + np.diff(p2, axis=0)
                                           * (m1p / dt)[:, None, None])
    cov = np.zeros((nn, nj, nj), dtype=complex)
    np.cumsum(0.5 * gamma * (inc1 + inc2), axis=0, out=cov[1:])

    amps = spec.target_amps
    u = amps[1:].conj() * spec.couplings
    noise_term = (np.abs(amps[0]) ** 2
                  * np.einsum("tjk,j,k->t", cov, u, u.conj()).real)
    fid = np.abs(prof.det_overlap) ** 2 + noise_term
    return FidelitySeries(t=grid.times(), F=fid,
                          stderr=np.zeros(nn))

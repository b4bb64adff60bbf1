"""Experiment orchestration: single runs, sweeps, seeded ensembles, CSV.

A validated config dispatches to one of four pipelines:

  * reduced kernel route (generic_matrix, spin_bath, two_level_adiabatic
    with mode none): memory kernel + phase -> one-component solve;
  * full propagation (leo_rotating, leo_lab, scaled_hamiltonian,
    parity_kick): state evolution with the controlled generator;
  * projection loop (zeno): segment propagation with projections;
  * stochastic multilevel ensembles (qsd_multilevel): closed-form,
    semianalytic, or Monte Carlo fidelity.

Monte Carlo sample i is seeded by the pair (master seed, i) and sweep
cell k reseeds from (master seed, k), so outputs are byte-identical for
a fixed config regardless of how work is split across workers. The CSV
writer is the single owner of every output file and emits cells in index
order. QLEAK_WORKERS sets the worker count (default 1).
"""
from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, IO, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .adiabatic import scaled_control, track_eigenpath, two_level_kernel
from .config import (COMPLEX_OBSERVABLES, ExperimentConfig, config_hash,
                     parse_config, pulse_sequence_from, serialize_config)
from .control import LEOSpec, apply_leo, leo_matrix, zeno_step
from .generators import Generator
from .grids import TimeGrid
from .kernels import PhaseAccumulator, kernel_from_blocks, phase_integral
from .partition import pq_partition
from .propagators import propagate
from .pulses import StepPlan, cumulative_areas, pulse_value
from .qsd import (QSDSpec, qsd_coefficients, qsd_fidelity_closed,
                  qsd_fidelity_semianalytic, qsd_mc_samples)
from .spinbath import SpinBathSpec, spin_bath_kernel
from .volterra import leakage_integral, solve_p

WORKERS_ENV = "QLEAK_WORKERS"


class RunError(RuntimeError):
    """A numerical failure during a run, with config context attached."""


@dataclass(frozen=True)
class RunResult:
    """Emitted time series plus run metadata.

    columns pairs each requested observable name with its node values
    (complex for complex-valued observables); rows are the grid nodes
    kept by the output stride. meta records config_hash, seed, version,
    and wall_time_s; metadata never enters the CSV, which keeps equal
    configs byte-identical.
    """

    times: np.ndarray
    columns: Tuple[Tuple[str, np.ndarray], ...]
    meta: Dict[str, Any]


def worker_count(env: Optional[str] = None) -> int:
    """Worker count from QLEAK_WORKERS (default 1)."""
    raw = os.environ.get(WORKERS_ENV) if env is None else env
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, "
                         f"got {raw!r}")
    return n


def _grid_of(cfg: ExperimentConfig) -> TimeGrid:
    s = cfg.solver
    return TimeGrid.from_step(s["t_start"], s["t_end"], s["dt"])


def _target_vector(model: Dict[str, Any], n: int) -> np.ndarray:
    tgt = model.get("target", 0)
    if isinstance(tgt, int):
        v = np.zeros(n, dtype=complex)
        v[tgt] = 1.0
        return v
    return np.asarray(tgt, dtype=complex)


def _lz_generator(model: Dict[str, Any]) -> Generator:
    rate, gap = model["sweep_rate"], model["gap"]

    def ham(t: float) -> np.ndarray:
        return 0.5 * np.array([[rate * t, gap], [gap, -rate * t]])

    return Generator.from_hamiltonian(2, ham)


def _kernel_pipeline(cfg, grid, seq):
    model = cfg.model
    mtype = model["type"]
    if mtype == "generic_matrix":
        gen = Generator.constant(np.asarray(model["matrix"], dtype=complex))
        blocks = pq_partition(gen, _target_vector(model, gen.dim))
        kernel = kernel_from_blocks(blocks, grid,
                                    scheme=cfg.solver["scheme"])
        phase = phase_integral(blocks.h, grid, pulses=seq)
    elif mtype == "spin_bath":
        spec = SpinBathSpec(splitting=model["splitting"],
                            bath_freqs=np.asarray(model["bath_freqs"]),
                            longitudinal=np.asarray(model["longitudinal"]),
                            transverse=np.asarray(model["transverse"]))
        kernel, phase = spin_bath_kernel(spec, grid, pulses=seq)
    else:
        path = track_eigenpath(_lz_generator(model), grid)
        kernel, phase = two_level_kernel(path)
        if seq is not None:
            phase = PhaseAccumulator(grid=grid, h_values=phase.h_values,
                                     C=phase.C + cumulative_areas(
                                         seq, grid.times()))
    amp = solve_p(kernel, phase, grid)
    out: Dict[str, np.ndarray] = {}
    names = cfg.output["observables"]
    keep = np.arange(0, grid.n_nodes, cfg.output["stride"])
    if "abs_p" in names:
        out["abs_p"] = np.abs(amp.P)[keep]
    if "p" in names:
        out["p"] = amp.P[keep]
    if "phase" in names:
        out["phase"] = phase.C[keep]
    if "abs_leak" in names:
        out["abs_leak"] = np.array(
            [abs(leakage_integral(kernel, phase, amp, grid.time_at(int(k))))
             for k in keep])
    return grid.times()[keep], out


def _overlap_series(states: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ki->k", states.conj(), psi)


def _propagation_pipeline(cfg, grid, seq):
    model, mode = cfg.model, cfg.control["mode"]
    plan = StepPlan(grid, seq)
    if model["type"] == "generic_matrix":
        gen = Generator.constant(np.asarray(model["matrix"], dtype=complex))
        target = _target_vector(model, gen.dim)
        if mode == "leo_rotating":
            gen = apply_leo(gen, LEOSpec(target=target, pulses=seq))
        psi = propagate(gen, target, grid, plan=plan)
        overlap = psi @ target.conj()
    else:
        ham = _lz_generator(model)
        ground = track_eigenpath(ham, grid).states[:, :, 0]
        if mode == "scaled_hamiltonian":
            gen = scaled_control(ham, seq)
        else:  # leo_lab: the parity projector is gauge free, so the
            # operator can be rebuilt from a fresh diagonalization at the
            # arbitrary substep times the integrator visits

            def h_fn(t: float) -> np.ndarray:
                h = ham.hamiltonian(t)
                vecs = np.linalg.eigh(h)[1]
                g = vecs[:, 0]
                return h + pulse_value(seq, t) * (
                    2.0 * np.outer(g, g.conj()) - np.eye(2))

            gen = Generator.from_hamiltonian(2, h_fn)
        psi = propagate(gen, ground[0], grid, plan=plan)
        overlap = _overlap_series(ground, psi)
    keep = np.arange(0, grid.n_nodes, cfg.output["stride"])
    out: Dict[str, np.ndarray] = {}
    if "abs_p" in cfg.output["observables"]:
        out["abs_p"] = np.abs(overlap)[keep]
    if "p" in cfg.output["observables"]:
        out["p"] = overlap[keep]
    return grid.times()[keep], out


def _segment_times(cfg) -> Tuple[int, int]:
    period = cfg.control["period"]
    span = cfg.solver["t_end"] - cfg.solver["t_start"]
    n_seg = int(round(span / period))
    steps = max(1, int(round(period / cfg.solver["dt"])))
    return n_seg, steps


def _parity_kick_pipeline(cfg):
    model = cfg.model
    gen = Generator.constant(np.asarray(model["matrix"], dtype=complex))
    target = _target_vector(model, gen.dim)
    kick = leo_matrix(target, 1.0)
    n_seg, steps = _segment_times(cfg)
    period, t0 = cfg.control["period"], cfg.solver["t_start"]
    overlap = np.empty(n_seg + 1, dtype=complex)
    state = target.astype(complex)
    overlap[0] = 1.0
    for k in range(n_seg):
        seg = TimeGrid.from_count(t0 + k * period, t0 + (k + 1) * period,
                                  steps)
        state = kick @ propagate(gen, state, seg)[-1]
        overlap[k + 1] = target.conj() @ state
    times = t0 + period * np.arange(n_seg + 1)
    keep = np.arange(0, n_seg + 1, cfg.output["stride"])
    out: Dict[str, np.ndarray] = {}
    if "abs_p" in cfg.output["observables"]:
        out["abs_p"] = np.abs(overlap)[keep]
    if "p" in cfg.output["observables"]:
        out["p"] = overlap[keep]
    return times[keep], out


def _zeno_pipeline(cfg):
    model = cfg.model
    gen = Generator.constant(np.asarray(model["matrix"], dtype=complex))
    target = _target_vector(model, gen.dim)
    n_seg, steps = _segment_times(cfg)
    period, t0 = cfg.control["period"], cfg.solver["t_start"]
    survival = np.empty(n_seg + 1)
    survival[0] = 1.0
    total = 1.0
    state = target.astype(complex)
    for k in range(n_seg):
        seg = TimeGrid.from_count(t0 + k * period, t0 + (k + 1) * period,
                                  steps)
        state = propagate(gen, state, seg)[-1]
        state, step_survival, absorbed = zeno_step(state, target)
        if absorbed:
            survival[k + 1:] = 0.0
            break
        total *= step_survival
        survival[k + 1] = total
    times = t0 + period * np.arange(n_seg + 1)
    keep = np.arange(0, n_seg + 1, cfg.output["stride"])
    return times[keep], {"survival": survival[keep]}


def _mc_chunks(n_traj: int, workers: int) -> List[Tuple[int, int]]:
    bounds = np.linspace(0, n_traj, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])
            if b > a]


def _mc_worker(cfg_text: str, lo: int, hi: int) -> np.ndarray:
    cfg = parse_config(cfg_text)
    spec, grid, seq = _qsd_setup(cfg)
    return qsd_mc_samples(spec, grid, lo, hi, pulses=seq,
                          seed=cfg.ensemble["master_seed"])


def _qsd_setup(cfg) -> Tuple[QSDSpec, TimeGrid, Any]:
    model = cfg.model
    spec = QSDSpec(energies=np.asarray(model["energies"], dtype=float),
                   couplings=np.asarray(model["couplings"], dtype=complex),
                   gamma=model["gamma"],
                   target_amps=np.asarray(model["target_amps"],
                                          dtype=complex))
    return spec, _grid_of(cfg), pulse_sequence_from(cfg.control)


def _qsd_pipeline(cfg, workers: int):
    spec, grid, seq = _qsd_setup(cfg)
    method = cfg.model["method"]
    seed = cfg.ensemble["master_seed"]
    stderr = None
    if method == "closed":
        series = qsd_fidelity_closed(spec, qsd_coefficients(spec, grid, seq))
        fid = series.F
    elif method == "semianalytic":
        fid = qsd_fidelity_semianalytic(spec, grid, seq).F
    else:
        n_traj = cfg.ensemble["n_traj"]
        if workers > 1 and n_traj >= 2 * workers:
            text = serialize_config(cfg)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_mc_worker, text, lo, hi)
                           for lo, hi in _mc_chunks(n_traj, workers)]
                samples = np.vstack([f.result() for f in futures])
        else:
            samples = qsd_mc_samples(spec, grid, 0, n_traj, pulses=seq,
                                     seed=seed)
        fid = samples.mean(axis=0)
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_traj)
    keep = np.arange(0, grid.n_nodes, cfg.output["stride"])
    out: Dict[str, np.ndarray] = {}
    if "fidelity" in cfg.output["observables"]:
        out["fidelity"] = fid[keep]
    if "stderr" in cfg.output["observables"]:
        out["stderr"] = stderr[keep]
    return grid.times()[keep], out


def run_experiment(cfg: ExperimentConfig,
                   workers: Optional[int] = None) -> RunResult:
    """Run one validated config and return its emitted series.

    workers defaults to the QLEAK_WORKERS environment variable; only
    Monte Carlo ensembles fan out, and their output is independent of
    the worker count.
    """
    if workers is None:
        workers = worker_count()
    start = time.perf_counter()
    grid = _grid_of(cfg)
    seq = pulse_sequence_from(cfg.control)
    mode = cfg.control["mode"]
    try:
        if cfg.model["type"] == "qsd_multilevel":
            times, series = _qsd_pipeline(cfg, workers)
        elif mode == "zeno":
            times, series = _zeno_pipeline(cfg)
        elif mode == "parity_kick":
            times, series = _parity_kick_pipeline(cfg)
        elif mode == "none":
            times, series = _kernel_pipeline(cfg, grid, seq)
        else:
            times, series = _propagation_pipeline(cfg, grid, seq)
    except (ValueError, RuntimeError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        raise RunError(f"{cfg.model['type']} run {config_hash(cfg)} "
                       f"failed: {exc}") from exc
    columns = tuple((name, series[name])
                    for name in cfg.output["observables"])
    meta = {"config_hash": config_hash(cfg),
            "seed": cfg.ensemble["master_seed"],
            "version": __version__,
            "wall_time_s": time.perf_counter() - start}
    return RunResult(times=times, columns=columns, meta=meta)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def expand_columns(columns) -> List[Tuple[str, np.ndarray]]:
    """Complex columns become adjacent re_name, im_name real columns."""
    flat: List[Tuple[str, np.ndarray]] = []
    for name, arr in columns:
        if name in COMPLEX_OBSERVABLES or np.iscomplexobj(arr):
            arr = np.asarray(arr, dtype=complex)
            flat.append((f"re_{name}", arr.real))
            flat.append((f"im_{name}", arr.imag))
        else:
            flat.append((name, np.asarray(arr, dtype=float)))
    return flat


def write_csv(result: RunResult, dest: Union[str, IO[str]]) -> None:
    """Emit t plus the observable columns, 17 significant digits."""
    if isinstance(dest, str):
        with open(dest, "w", newline="") as f:
            write_csv(result, f)
        return
    flat = expand_columns(result.columns)
    dest.write(",".join(["t"] + [name for name, _ in flat]) + "\n")
    for i, t in enumerate(result.times):
        row = [_fmt(t)] + [_fmt(arr[i]) for _, arr in flat]
        dest.write(",".join(row) + "\n")


def run_sweep(cfg: ExperimentConfig,
              sweep: Sequence[Tuple[str, Sequence[Any]]],
              workers: Optional[int] = None) -> List[RunResult]:
    """Cartesian product of value lists over dotted key paths.

    Cell k gets master seed derived from (base seed, k); results come
    back in cell order whatever the worker scheduling. An empty sweep is
    exactly run_experiment.
    """
    if workers is None:
        workers = worker_count()
    if not sweep:
        return [run_experiment(cfg, workers=workers)]
    base_seed = cfg.ensemble["master_seed"]
    cells: List[ExperimentConfig] = []
    assignments: List[Dict[str, Any]] = []
    for idx, combo in enumerate(itertools.product(*(v for _, v in sweep))):
        cell = cfg
        for (key, _), value in zip(sweep, combo):
            cell = cell.replace_value(key, value)
        seed = int(np.random.SeedSequence([base_seed, idx]).generate_state(1)[0])
        cell = cell.replace_value("ensemble.master_seed", seed)
        # revalidate: swept values must leave the config well formed
        cell = parse_config(serialize_config(cell))
        cells.append(cell)
        assignments.append({key: value for (key, _), value
                            in zip(sweep, combo)})
    if workers > 1 and len(cells) > 1:
        texts = [serialize_config(cell) for cell in cells]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_cell_worker, text) for text in texts]
            results = [f.result() for f in futures]
    else:
        results = [run_experiment(cell, workers=1) for cell in cells]
    out = []
    for idx, (result, values) in enumerate(zip(results, assignments)):
        meta = dict(result.meta, cell=idx, sweep=values)
        out.append(RunResult(times=result.times, columns=result.columns,
                             meta=meta))
    return out


def _cell_worker(cfg_text: str) -> RunResult:
    return run_experiment(parse_config(cfg_text), workers=1)


def write_sweep(results: Sequence[RunResult], out_dir: str) -> List[str]:
    """Per-cell CSVs plus summary.csv (final row per cell), in cell order."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for idx, result in enumerate(results):
        path = os.path.join(out_dir, f"cell_{idx:03d}.csv")
        write_csv(result, path)
        paths.append(path)
    summary = os.path.join(out_dir, "summary.csv")
    swept_keys = list(results[0].meta.get("sweep", {}))
    with open(summary, "w", newline="") as f:
        flat0 = expand_columns(results[0].columns)
        f.write(",".join(["cell"] + swept_keys + ["t"]
                         + [name for name, _ in flat0]) + "\n")
        for idx, result in enumerate(results):
            flat = expand_columns(result.columns)
            vals = [str(idx)]
            for k in swept_keys:
                v = result.meta["sweep"][k]
                vals.append(_fmt(v) if isinstance(v, (int, float)) else str(v))
            vals.append(_fmt(result.times[-1]))
            vals += [_fmt(arr[-1]) for _, arr in flat]
            f.write(",".join(vals) + "\n")
    paths.append(summary)
    return paths

"""Experiment configuration: strict schema, parsing, canonical serialization.

A config is a YAML mapping with sections model / solver / control /
ensemble / output. All frequencies are in units of a reference rate set
to 1 and the time axis is emitted in those units. Complex entries are
written either as a plain number or as a two-element [re, im] list.

Validation is collective: parse_config gathers every violation, each
prefixed with the dotted path of the offending field, and raises one
ConfigError carrying the whole list.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .grids import TimeGrid
from .pulses import KINDS, SIGN_POLICIES, PulseSequence
from .qsd import _check_pulses

MODEL_TYPES = ("generic_matrix", "two_level_adiabatic", "spin_bath",
               "qsd_multilevel")
CONTROL_MODES = ("none", "leo_rotating", "leo_lab", "scaled_hamiltonian",
                 "parity_kick", "zeno")
QSD_METHODS = ("closed", "mc", "semianalytic")
SCHEMES = ("rk4", "magnus2")

# which control modes make sense for which model
MODES_BY_MODEL = {
    "generic_matrix": ("none", "leo_rotating", "parity_kick", "zeno"),
    "two_level_adiabatic": ("none", "leo_lab", "scaled_hamiltonian"),
    "spin_bath": ("none",),
    "qsd_multilevel": ("none",),
}

# observable vocabulary per pipeline; "p" and "phase" are complex-valued
KERNEL_OBSERVABLES = ("abs_p", "p", "abs_leak", "phase")
PROPAGATION_OBSERVABLES = ("abs_p", "p")
ZENO_OBSERVABLES = ("survival",)
QSD_OBSERVABLES = ("fidelity", "stderr")
COMPLEX_OBSERVABLES = ("p", "phase")


class ConfigError(ValueError):
    """All schema violations of one document, each with a dotted path."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated config; section mappings with every default filled in."""

    model: Dict[str, Any]
    solver: Dict[str, Any]
    control: Dict[str, Any]
    ensemble: Dict[str, Any]
    output: Dict[str, Any]

    def replace_value(self, key_path: str, value: Any) -> "ExperimentConfig":
        """A copy with the field at 'section.key' replaced."""
        section, _, key = key_path.partition(".")
        if section not in _SECTIONS or not key:
            raise KeyError(f"{key_path}: no such config field")
        current = getattr(self, section)
        if key not in current:
            raise KeyError(f"{key_path}: no such config field")
        updated = dict(current)
        updated[key] = value
        return ExperimentConfig(**{**{s: getattr(self, s) for s in _SECTIONS},
                                   section: updated})


_SECTIONS = ("model", "solver", "control", "ensemble", "output")


class _Checker:
    """Accumulates dotted-path violations over one document."""

    def __init__(self):
        self.violations: List[str] = []

    def add(self, path: str, msg: str) -> None:
        self.violations.append(f"{path}: {msg}")

    def section(self, doc: Dict[str, Any], name: str,
                required: bool) -> Optional[Dict[str, Any]]:
        if name not in doc:
            if required:
                self.add(name, "missing required section")
            return None if required else {}
        sec = doc[name]
        if not isinstance(sec, dict):
            self.add(name, f"must be a mapping, got {type(sec).__name__}")
            return None
        return sec

    def no_unknown(self, sec: Dict[str, Any], name: str,
                   allowed: Tuple[str, ...]) -> None:
        for key in sec:
            if key not in allowed:
                self.add(f"{name}.{key}", "unknown key")

    def number(self, sec, name, key, required=False, default=None,
               positive=False, minimum=None):
        path = f"{name}.{key}"
        if key not in sec:
            if required:
                self.add(path, "missing required key")
            return default
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(path, f"must be a number, got {type(v).__name__}")
            return default
        v = float(v)
        if positive and v <= 0:
            self.add(path, f"must be positive, got {v:g}")
            return default
        if minimum is not None and v < minimum:
            self.add(path, f"must be >= {minimum:g}, got {v:g}")
            return default
        return v

    def integer(self, sec, name, key, required=False, default=None,
                minimum=None):
        path = f"{name}.{key}"
        if key not in sec:
            if required:
                self.add(path, "missing required key")
            return default
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(path, f"must be an integer, got {type(v).__name__}")
            return default
        if minimum is not None and v < minimum:
            self.add(path, f"must be >= {minimum}, got {v}")
            return default
        return v

    def choice(self, sec, name, key, allowed, default=None):
        path = f"{name}.{key}"
        if key not in sec:
            return default
        v = sec[key]
        if v not in allowed:
            self.add(path, f"must be one of {', '.join(allowed)}, got {v!r}")
            return default
        return v

    def string(self, sec, name, key, default=None):
        path = f"{name}.{key}"
        if key not in sec:
            return default
        v = sec[key]
        if not isinstance(v, str):
            self.add(path, f"must be a string, got {type(v).__name__}")
            return default
        return v

    def complex_cell(self, v, path):
        if isinstance(v, bool):
            self.add(path, "must be a number or [re, im] pair, got bool")
            return None
        if isinstance(v, (int, float)):
            return complex(v)
        if (isinstance(v, list) and len(v) == 2
                and all(isinstance(u, (int, float)) and not isinstance(u, bool)
                        for u in v)):
            return complex(v[0], v[1])
        self.add(path, f"must be a number or [re, im] pair, got {v!r}")
        return None

    def float_list(self, sec, name, key, required=False):
        path = f"{name}.{key}"
        if key not in sec:
            if required:
                self.add(path, "missing required key")
            return None
        v = sec[key]
        if (not isinstance(v, list) or not v
                or not all(isinstance(u, (int, float))
                           and not isinstance(u, bool) for u in v)):
            self.add(path, "must be a nonempty list of numbers")
            return None
        return [float(u) for u in v]

    def complex_list(self, sec, name, key, required=False):
        path = f"{name}.{key}"
        if key not in sec:
            if required:
                self.add(path, "missing required key")
            return None
        v = sec[key]
        if not isinstance(v, list) or not v:
            self.add(path, "must be a nonempty list")
            return None
        out = [self.complex_cell(u, f"{path}[{i}]") for i, u in enumerate(v)]
        return None if any(u is None for u in out) else out


def _check_model(c: _Checker, sec: Dict[str, Any]) -> Dict[str, Any]:
    mtype = c.choice(sec, "model", "type", MODEL_TYPES)
    if "type" not in sec:
        c.add("model.type", "missing required key")
    if mtype is None:
        return {"type": None}
    out: Dict[str, Any] = {"type": mtype}
    if mtype == "generic_matrix":
        c.no_unknown(sec, "model", ("type", "matrix", "target"))
        m = sec.get("matrix")
        if m is None:
            c.add("model.matrix", "missing required key")
        elif (not isinstance(m, list) or not m
              or not all(isinstance(r, list) and len(r) == len(m) for r in m)):
            c.add("model.matrix", "must be a square list of rows")
        else:
            rows = [[c.complex_cell(u, f"model.matrix[{i}][{j}]")
                     for j, u in enumerate(r)] for i, r in enumerate(m)]
            if all(u is not None for r in rows for u in r):
                if len(rows) < 2:
                    c.add("model.matrix", "needs at least 2 rows")
                else:
                    out["matrix"] = rows
        n = len(m) if isinstance(m, list) else 0
        tgt = sec.get("target", 0)
        if isinstance(tgt, bool):
            c.add("model.target", "must be a basis index or a complex vector")
        elif isinstance(tgt, int):
            if n and not 0 <= tgt < n:
                c.add("model.target", f"index {tgt} out of range for "
                                      f"{n} levels")
            else:
                out["target"] = tgt
        elif isinstance(tgt, list):
            vec = [c.complex_cell(u, f"model.target[{i}]")
                   for i, u in enumerate(tgt)]
            if all(u is not None for u in vec):
                if n and len(vec) != n:
                    c.add("model.target", f"length {len(vec)} does not match "
                                          f"{n} levels")
                elif abs(sum(abs(u) ** 2 for u in vec) - 1.0) > 1e-10:
                    c.add("model.target", "vector must be normalized")
                else:
                    out["target"] = vec
        else:
            c.add("model.target", "must be a basis index or a complex vector")
    elif mtype == "two_level_adiabatic":
        c.no_unknown(sec, "model", ("type", "gap", "sweep_rate"))
        out["gap"] = c.number(sec, "model", "gap", required=True,
                              positive=True)
        rate = c.number(sec, "model", "sweep_rate", required=True)
        if rate == 0.0:
            c.add("model.sweep_rate", "must be nonzero")
        out["sweep_rate"] = rate
    elif mtype == "spin_bath":
        c.no_unknown(sec, "model", ("type", "splitting", "bath_freqs",
                                    "longitudinal", "transverse"))
        out["splitting"] = c.number(sec, "model", "splitting", required=True)
        freqs = c.float_list(sec, "model", "bath_freqs", required=True)
        out["bath_freqs"] = freqs
        for key in ("longitudinal", "transverse"):
            vals = c.float_list(sec, "model", key, required=True)
            if vals is not None and freqs is not None \
                    and len(vals) != len(freqs):
                c.add(f"model.{key}", f"length {len(vals)} does not match "
                                      f"bath_freqs length {len(freqs)}")
            out[key] = vals
    elif mtype == "qsd_multilevel":
        c.no_unknown(sec, "model", ("type", "energies", "couplings", "gamma",
                                    "target_amps", "method"))
        amps = c.complex_list(sec, "model", "target_amps", required=True)
        out["target_amps"] = amps
        n = len(amps) if amps else 0
        if amps is not None:
            if n < 2:
                c.add("model.target_amps", "needs at least 2 levels")
            elif abs(sum(abs(a) ** 2 for a in amps) - 1.0) > 1e-10:
                c.add("model.target_amps",
                      f"must be normalized; sum of squares is "
                      f"{sum(abs(a) ** 2 for a in amps):.6g}")
        energies = c.float_list(sec, "model", "energies", required=True)
        if energies is not None and n and len(energies) != n:
            c.add("model.energies", f"length {len(energies)} does not match "
                                    f"{n} target amplitudes")
        out["energies"] = energies
        coup = c.complex_list(sec, "model", "couplings", required=True)
        if coup is not None and n and len(coup) != n - 1:
            c.add("model.couplings", f"length {len(coup)} must be one less "
                                     f"than the {n} levels")
        out["couplings"] = coup
        out["gamma"] = c.number(sec, "model", "gamma", required=True,
                                positive=True)
        out["method"] = c.choice(sec, "model", "method", QSD_METHODS,
                                 default="closed")
    return out


def _check_control(c: _Checker, sec: Dict[str, Any]) -> Dict[str, Any]:
    allowed = ("mode", "kind", "strength", "duration", "period", "noise",
               "sign_policy", "seed")
    c.no_unknown(sec, "control", allowed)
    out = {
        "mode": c.choice(sec, "control", "mode", CONTROL_MODES,
                         default="none"),
        "kind": c.choice(sec, "control", "kind", KINDS, default="none"),
        "strength": c.number(sec, "control", "strength", default=0.0),
        "duration": c.number(sec, "control", "duration", default=0.0,
                             minimum=0.0),
        "period": c.number(sec, "control", "period", default=0.0,
                           minimum=0.0),
        "noise": c.number(sec, "control", "noise", default=0.0, minimum=0.0),
        "sign_policy": c.choice(sec, "control", "sign_policy", SIGN_POLICIES,
                                default="periodic_flip"),
        "seed": c.integer(sec, "control", "seed", default=0, minimum=0),
    }
    if out["kind"] is not None and out["kind"] != "none":
        for key in ("strength", "duration", "period"):
            if key not in sec:
                c.add(f"control.{key}",
                      f"missing required key for kind {out['kind']}")
        if out["period"] == 0.0 and "period" in sec:
            c.add("control.period", "must be positive")
        if (out["kind"] in ("regular_rect", "noisy_rect")
                and "duration" in sec and out["duration"] == 0.0):
            c.add("control.duration", "must be positive for a rect kind")
        if (out["kind"] == "ideal_delta" and "duration" in sec
                and out["duration"] != 0.0):
            c.add("control.duration", "must be 0 for ideal_delta")
    if out["mode"] in ("parity_kick", "zeno") and out["period"] == 0.0:
        c.add("control.period", f"mode {out['mode']} needs a positive period")
    return out


def pulse_sequence_from(control: Dict[str, Any]) -> Optional[PulseSequence]:
    """The PulseSequence a validated control section describes, if any."""
    if control["kind"] in (None, "none"):
        return None
    return PulseSequence(kind=control["kind"], strength=control["strength"],
                         duration=control["duration"],
                         period=control["period"], noise=control["noise"],
                         sign_policy=control["sign_policy"],
                         seed=control["seed"])


def _cross_checks(c: _Checker, model, solver, control, ensemble, output):
    mtype = model.get("type")
    mode = control.get("mode")
    kind = control.get("kind")
    if None in (mtype, mode, kind):
        return
    if mode not in MODES_BY_MODEL.get(mtype, ()):
        c.add("control.mode",
              f"mode {mode} does not apply to model type {mtype}; "
              f"choose one of {', '.join(MODES_BY_MODEL[mtype])}")
        return
    if mode == "parity_kick" and kind != "ideal_delta":
        c.add("control.kind", "mode parity_kick requires kind ideal_delta")
    if mode in ("leo_rotating", "leo_lab", "scaled_hamiltonian") \
            and kind not in ("regular_rect", "noisy_rect"):
        c.add("control.kind", f"mode {mode} requires a rect pulse kind")
    if mtype == "qsd_multilevel" and kind == "ideal_delta":
        c.add("control.kind",
              "delta kicks are not supported for level-energy control")

    dt = solver.get("dt")
    t_start, t_end = solver.get("t_start"), solver.get("t_end")
    if dt is None or t_end is None:
        return
    if t_end <= t_start:
        c.add("solver.t_end", f"must exceed t_start ({t_start:g})")
        return
    span = t_end - t_start
    if abs(round(span / dt) * dt - span) > 1e-9 * max(1.0, span):
        c.add("solver.dt", f"span {span:g} is not an integer number of steps")
        return
    period = control.get("period") or 0.0
    if mode in ("parity_kick", "zeno") and period > 0.0:
        cycles = span / period
        if abs(round(cycles) - cycles) > 1e-9 or round(cycles) < 1:
            c.add("control.period",
                  f"span {span:g} must be a whole number of periods")
    if kind not in (None, "none"):
        try:
            seq = pulse_sequence_from(control)
            if mtype == "qsd_multilevel":
                grid = TimeGrid.from_step(t_start, t_end, dt)
                _check_pulses(grid, seq, align=True)
        except ValueError as exc:
            c.add("control", str(exc))

    observables = output.get("observables")
    if observables is None:
        return
    if mtype == "qsd_multilevel":
        legal, label = QSD_OBSERVABLES, "a qsd_multilevel run"
    elif mode == "zeno":
        legal, label = ZENO_OBSERVABLES, "a zeno run"
    elif mode == "none":
        legal, label = KERNEL_OBSERVABLES, f"a {mtype} run"
    else:
        legal, label = PROPAGATION_OBSERVABLES, f"a {mode} run"
    for i, name in enumerate(observables):
        if name not in legal:
            c.add(f"output.observables[{i}]",
                  f"{name} is not recorded by {label}; available: "
                  f"{', '.join(legal)}")
    if mtype == "qsd_multilevel" and "stderr" in observables \
            and model.get("method") != "mc":
        c.add("output.observables", "stderr needs model.method mc")
    if mtype == "qsd_multilevel" and model.get("method") == "mc" \
            and (ensemble.get("n_traj") or 0) < 2:
        c.add("ensemble.n_traj", "method mc needs at least 2 trajectories")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML config document.

    Raises ConfigError carrying every violation found, each prefixed with
    the dotted path of the offending field. Emits a UserWarning when the
    solver step undersamples an active pulse window (dt > duration / 4).
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"document: not valid YAML ({exc})"])
    if not isinstance(doc, dict):
        raise ConfigError(["document: top level must be a mapping of "
                           "sections model/solver/control/ensemble/output"])
    c = _Checker()
    for key in doc:
        if key not in _SECTIONS:
            c.add(str(key), "unknown section")

    model_sec = c.section(doc, "model", required=True)
    solver_sec = c.section(doc, "solver", required=True)
    control_sec = c.section(doc, "control", required=False)
    ensemble_sec = c.section(doc, "ensemble", required=False)
    output_sec = c.section(doc, "output", required=True)

    model = _check_model(c, model_sec) if model_sec is not None else {}
    solver: Dict[str, Any] = {}
    if solver_sec is not None:
        c.no_unknown(solver_sec, "solver", ("dt", "t_start", "t_end",
                                            "scheme"))
        solver = {
            "dt": c.number(solver_sec, "solver", "dt", required=True,
                           positive=True),
            "t_start": c.number(solver_sec, "solver", "t_start", default=0.0),
            "t_end": c.number(solver_sec, "solver", "t_end", required=True),
            "scheme": c.choice(solver_sec, "solver", "scheme", SCHEMES,
                               default="rk4"),
        }
    control = _check_control(c, control_sec) if control_sec is not None \
        else _check_control(c, {})
    ensemble: Dict[str, Any] = {}
    if ensemble_sec is not None:
        c.no_unknown(ensemble_sec, "ensemble", ("n_traj", "master_seed"))
        ensemble = {
            "n_traj": c.integer(ensemble_sec, "ensemble", "n_traj",
                                default=1, minimum=1),
            "master_seed": c.integer(ensemble_sec, "ensemble", "master_seed",
                                     default=0, minimum=0),
        }
    output: Dict[str, Any] = {}
    if output_sec is not None:
        c.no_unknown(output_sec, "output", ("path", "observables", "stride"))
        obs = output_sec.get("observables")
        if obs is None:
            c.add("output.observables", "missing required key")
        elif (not isinstance(obs, list) or not obs
              or not all(isinstance(u, str) for u in obs)):
            c.add("output.observables", "must be a nonempty list of names")
            obs = None
        elif len(set(obs)) != len(obs):
            c.add("output.observables", "names must not repeat")
        output = {
            "path": c.string(output_sec, "output", "path"),
            "observables": obs,
            "stride": c.integer(output_sec, "output", "stride", default=1,
                                minimum=1),
        }

    if not c.violations:
        _cross_checks(c, model, solver, control, ensemble, output)
    if c.violations:
        raise ConfigError(c.violations)

    if control["kind"] in ("regular_rect", "noisy_rect") \
            and solver["dt"] > 0.25 * control["duration"]:
        warnings.warn(
            f"solver.dt = {solver['dt']:g} undersamples the pulse window "
            f"(duration {control['duration']:g}); edges are sub-stepped but "
            f"consider dt <= duration / 4", UserWarning, stacklevel=2)
    return ExperimentConfig(model=model, solver=solver, control=control,
                            ensemble=ensemble, output=output)


def _plain(value: Any) -> Any:
    """Canonical YAML-ready form; complex becomes [re, im] or a float."""
    if isinstance(value, complex):
        return value.real if value.imag == 0.0 else [value.real, value.imag]
    if isinstance(value, list):
        return [_plain(u) for u in value]
    return value


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML text; parse(serialize(cfg)) reproduces cfg exactly."""
    doc = {}
    for name in _SECTIONS:
        sec = {k: _plain(v) for k, v in getattr(cfg, name).items()
               if v is not None}
        doc[name] = sec
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=None)


def config_hash(cfg: ExperimentConfig) -> str:
    """Short digest of the canonical serialization."""
    text = serialize_config(cfg)
    return hashlib.sha256(text.encode()).hexdigest()[:12]

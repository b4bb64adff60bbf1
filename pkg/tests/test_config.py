"""Schema validation, collective error reporting, canonical round trips."""
import warnings

import pytest

from qleak.config import (ConfigError, ExperimentConfig, config_hash,
                          parse_config, pulse_sequence_from, serialize_config)

GENERIC = """
model:
  type: generic_matrix
  matrix:
    - [0.0, [0.0, -2.0]]
    - [[0.0, -2.0], 0.0]
solver:
  dt: 1.0e-3
  t_end: 10.0
output:
  observables: [abs_p, p, abs_leak, phase]
  stride: 1000
"""

TWO_LEVEL = """
model:
  type: two_level_adiabatic
  gap: 0.8
  sweep_rate: 1.0
solver:
  dt: 1.0e-3
  t_start: -4.0
  t_end: 4.0
output:
  observables: [abs_p, abs_leak]
"""

SPIN_BATH = """
model:
  type: spin_bath
  splitting: 1.2
  bath_freqs: [0.9, 1.1, 0.7]
  longitudinal: [0.2, 0.15, 0.1]
  transverse: [0.3, 0.25, 0.2]
control:
  kind: regular_rect
  strength: 12.0
  duration: 0.05
  period: 0.1
  sign_policy: constant
solver:
  dt: 2.0e-3
  t_end: 6.0
output:
  observables: [abs_p]
  stride: 500
"""

QSD = """
model:
  type: qsd_multilevel
  target_amps: [0.5, 0.5, 0.5, 0.5]
  energies: [1.0, 0.0, 0.0, 0.0]
  couplings: [0.1, 0.1, 0.1]
  gamma: 0.5
  method: mc
control:
  kind: regular_rect
  strength: 157.07963267948966
  duration: 0.01
  period: 0.02
ensemble:
  n_traj: 16
  master_seed: 7
solver:
  dt: 2.0e-3
  t_end: 2.0
output:
  observables: [fidelity, stderr]
"""


def violations_of(text):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    return err.value.violations


def assert_flagged(text, *fragments):
    found = violations_of(text)
    for frag in fragments:
        assert any(frag in v for v in found), (frag, found)
    return found


class TestParsing:
    def test_minimal_generic_fills_defaults(self):
        cfg = parse_config(GENERIC)
        assert cfg.model["type"] == "generic_matrix"
        assert cfg.model["target"] == 0
        assert cfg.model["matrix"][0][1] == -2.0j
        assert cfg.solver == {"dt": 1e-3, "t_start": 0.0, "t_end": 10.0,
                              "scheme": "rk4"}
        assert cfg.control["mode"] == "none"
        assert cfg.control["kind"] == "none"
        assert cfg.ensemble == {"n_traj": 1, "master_seed": 0}
        assert cfg.output["stride"] == 1000
        assert cfg.output["path"] is None
        assert pulse_sequence_from(cfg.control) is None

    def test_each_model_type_parses(self):
        for text in (GENERIC, TWO_LEVEL, SPIN_BATH, QSD):
            parse_config(text)

    def test_qsd_pulses_materialize(self):
        cfg = parse_config(QSD)
        seq = pulse_sequence_from(cfg.control)
        assert seq is not None
        assert seq.kind == "regular_rect"
        assert seq.period == pytest.approx(0.02)

    def test_not_yaml(self):
        assert_flagged("a: [unclosed", "document: not valid YAML")

    def test_top_level_not_mapping(self):
        assert_flagged("- 1\n- 2\n", "document: top level must be a mapping")
        assert_flagged("just words", "document: top level must be a mapping")

    def test_missing_sections(self):
        found = assert_flagged("control: {}\n",
                               "model: missing required section",
                               "solver: missing required section",
                               "output: missing required section")
        assert all(v.startswith(("model", "solver", "output"))
                   for v in found)

    def test_unknown_section_and_key(self):
        text = GENERIC + "extra:\n  x: 1\n"
        assert_flagged(text, "extra: unknown section")
        assert_flagged(GENERIC.replace("stride: 1000", "stride: 1000\n  pad: 2"),
                       "output.pad: unknown key")


class TestFieldChecks:
    def test_booleans_are_not_numbers(self):
        assert_flagged(GENERIC.replace("dt: 1.0e-3", "dt: true"),
                       "solver.dt: must be a number, got bool")

    def test_dt_must_be_positive(self):
        assert_flagged(GENERIC.replace("dt: 1.0e-3", "dt: -0.1"),
                       "solver.dt: must be positive")

    def test_stride_must_be_integer(self):
        assert_flagged(GENERIC.replace("stride: 1000", "stride: 2.5"),
                       "output.stride: must be an integer")

    def test_matrix_must_be_square(self):
        text = GENERIC.replace("    - [[0.0, -2.0], 0.0]\n", "")
        assert_flagged(text, "model.matrix: must be a square list of rows")

    def test_matrix_cell_types(self):
        assert_flagged(GENERIC.replace("[0.0, -2.0]", "oops"),
                       "model.matrix[0][1]: must be a number or [re, im] pair")

    def test_target_index_range(self):
        assert_flagged(GENERIC.replace("type: generic_matrix",
                                       "type: generic_matrix\n  target: 5"),
                       "model.target: index 5 out of range")

    def test_target_vector_norm_and_length(self):
        base = GENERIC.replace("type: generic_matrix",
                               "type: generic_matrix\n  target: [0.5, 0.5]")
        assert_flagged(base, "model.target: vector must be normalized")
        short = GENERIC.replace("type: generic_matrix",
                                "type: generic_matrix\n  target: [1.0]")
        assert_flagged(short, "model.target: length 1 does not match")

    def test_two_level_gap_and_rate(self):
        assert_flagged(TWO_LEVEL.replace("gap: 0.8", "gap: 0.0"),
                       "model.gap: must be positive")
        assert_flagged(TWO_LEVEL.replace("sweep_rate: 1.0", "sweep_rate: 0.0"),
                       "model.sweep_rate: must be nonzero")

    def test_spin_bath_length_mismatch(self):
        text = SPIN_BATH.replace("longitudinal: [0.2, 0.15, 0.1]",
                                 "longitudinal: [0.2, 0.15]")
        assert_flagged(text, "model.longitudinal: length 2 does not match "
                             "bath_freqs length 3")

    def test_qsd_normalization_message_carries_the_norm(self):
        text = QSD.replace("target_amps: [0.5, 0.5, 0.5, 0.5]",
                           "target_amps: [0.8, 0.5]") \
                  .replace("energies: [1.0, 0.0, 0.0, 0.0]",
                           "energies: [1.0, 0.0]") \
                  .replace("couplings: [0.1, 0.1, 0.1]", "couplings: [0.1]")
        assert_flagged(text, "model.target_amps: must be normalized; "
                             "sum of squares is 0.89")

    def test_qsd_shape_mismatches(self):
        assert_flagged(QSD.replace("energies: [1.0, 0.0, 0.0, 0.0]",
                                   "energies: [1.0, 0.0]"),
                       "model.energies: length 2 does not match 4")
        assert_flagged(QSD.replace("couplings: [0.1, 0.1, 0.1]",
                                   "couplings: [0.1, 0.1]"),
                       "model.couplings: length 2 must be one less")

    def test_multiple_violations_collected_in_one_error(self):
        text = QSD.replace("target_amps: [0.5, 0.5, 0.5, 0.5]",
                           "target_amps: [0.8, 0.5]") \
                  .replace("strength:", "strenght:")
        found = assert_flagged(text,
                               "model.target_amps: must be normalized",
                               "control.strenght: unknown key",
                               "control.strength: missing required key")
        assert len(found) >= 3

    def test_observable_names_unique_and_known(self):
        assert_flagged(GENERIC.replace("[abs_p, p, abs_leak, phase]",
                                       "[abs_p, abs_p]"),
                       "output.observables: names must not repeat")
        assert_flagged(GENERIC.replace("[abs_p, p, abs_leak, phase]",
                                       "[abs_p, survival]"),
                       "output.observables[1]: survival is not recorded")


class TestCrossChecks:
    def test_mode_must_fit_model(self):
        text = QSD.replace("control:", "control:\n  mode: zeno")
        assert_flagged(text, "control.mode: mode zeno does not apply to "
                             "model type qsd_multilevel")

    def test_parity_kick_needs_delta(self):
        text = GENERIC + ("control:\n  mode: parity_kick\n"
                          "  kind: regular_rect\n  strength: 3.0\n"
                          "  duration: 0.01\n  period: 0.05\n")
        assert_flagged(text, "control.kind: mode parity_kick requires kind "
                             "ideal_delta")

    def test_leo_needs_rect(self):
        text = GENERIC + ("control:\n  mode: leo_rotating\n"
                          "  kind: ideal_delta\n  strength: 3.0\n"
                          "  duration: 0.0\n  period: 0.05\n")
        assert_flagged(text, "control.kind: mode leo_rotating requires a "
                             "rect pulse kind")

    def test_qsd_rejects_delta_kicks(self):
        text = QSD.replace("kind: regular_rect", "kind: ideal_delta") \
                  .replace("duration: 0.01", "duration: 0.0")
        assert_flagged(text, "control.kind: delta kicks are not supported")

    def test_time_window_must_be_ordered(self):
        assert_flagged(TWO_LEVEL.replace("t_end: 4.0", "t_end: -5.0"),
                       "solver.t_end: must exceed t_start")

    def test_span_must_divide_dt(self):
        assert_flagged(GENERIC.replace("t_end: 10.0", "t_end: 10.0005"),
                       "solver.dt: span 10.0005 is not an integer number")

    def test_zeno_needs_whole_periods(self):
        text = GENERIC.replace("observables: [abs_p, p, abs_leak, phase]",
                               "observables: [survival]")
        text += "control:\n  mode: zeno\n  period: 0.3\n"
        assert_flagged(text, "control.period: span 10 must be a whole "
                             "number of periods")

    def test_pulse_invariants_surface_as_control_violation(self):
        text = SPIN_BATH.replace("sign_policy: constant",
                                 "sign_policy: constant\n  noise: 1.5")
        found = assert_flagged(text, "control: ")
        assert any("noise" in v for v in found)

    def test_qsd_pulse_edges_must_align(self):
        text = QSD.replace("duration: 0.01", "duration: 0.0105")
        assert_flagged(text, "control: ")

    def test_stderr_needs_mc(self):
        assert_flagged(QSD.replace("method: mc", "method: closed"),
                       "output.observables: stderr needs model.method mc")

    def test_mc_needs_trajectories(self):
        assert_flagged(QSD.replace("n_traj: 16", "n_traj: 1"),
                       "ensemble.n_traj: method mc needs at least 2")

    def test_undersampling_warns(self):
        text = QSD.replace("dt: 2.0e-3", "dt: 5.0e-3")
        with pytest.warns(UserWarning, match="undersamples the pulse"):
            parse_config(text)

    def test_well_sampled_pulse_is_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            parse_config(QSD)


class TestCanonicalForm:
    def test_round_trip_is_identity(self):
        for text in (GENERIC, TWO_LEVEL, SPIN_BATH, QSD):
            cfg = parse_config(text)
            again = parse_config(serialize_config(cfg))
            assert again == cfg
            assert config_hash(again) == config_hash(cfg)

    def test_hash_sees_value_changes(self):
        cfg = parse_config(GENERIC)
        bumped = cfg.replace_value("solver.dt", 2e-3)
        assert config_hash(bumped) != config_hash(cfg)

    def test_replace_value_leaves_original_alone(self):
        cfg = parse_config(QSD)
        other = cfg.replace_value("ensemble.master_seed", 99)
        assert other.ensemble["master_seed"] == 99
        assert cfg.ensemble["master_seed"] == 7
        assert other.model == cfg.model

    def test_replace_value_rejects_unknown_paths(self):
        cfg = parse_config(GENERIC)
        for path in ("model.nope", "nowhere.dt", "solver", "solver."):
            with pytest.raises(KeyError):
                cfg.replace_value(path, 1.0)

    def test_serialized_form_is_plain_yaml(self):
        text = serialize_config(parse_config(GENERIC))
        assert "!!" not in text  # no python-specific tags
        assert "[0.0, -2.0]" in text

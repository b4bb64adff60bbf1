import numpy as np
import pytest

from qleak.grids import TimeGrid
from qleak.pulses import (PulseSequence, StepPlan, cumulative_areas,
                          kick_times, phase_area, pulse_value, window_level)

REG = PulseSequence(kind="regular_rect", strength=2.0, duration=0.2,
                    period=1.0, sign_policy="periodic_flip", seed=0)


def test_regular_levels_alternate():
    # strength / duration = 10, first window positive
    assert [window_level(REG, m) for m in (1, 2, 3)] == [10.0, -10.0, 10.0]


def test_windows_sit_before_period_marks():
    # window m covers [m*period - duration, m*period)
    assert pulse_value(REG, 0.5) == 0.0
    assert pulse_value(REG, 0.9) == 10.0
    assert pulse_value(REG, 1.0) == 0.0       # right edge excluded
    assert pulse_value(REG, 0.8) == 10.0      # left edge included
    assert pulse_value(REG, -0.5) == 0.0      # no windows before the first


def test_phase_area_exact_overlaps():
    assert phase_area(REG, 0.0, 3.0) == pytest.approx(2.0, abs=1e-12)
    assert phase_area(REG, 0.85, 1.1) == pytest.approx(1.5, abs=1e-12)
    assert phase_area(REG, 0.0, 0.79) == pytest.approx(0.0, abs=1e-12)


def test_full_window_area_is_signed_strength():
    for m in (1, 2, 5):
        a = phase_area(REG, m * 1.0 - 0.2, m * 1.0)
        assert a == pytest.approx((-1.0) ** (m - 1) * 2.0, abs=1e-12)


def test_cumulative_areas_match_pairwise_sums():
    times = np.linspace(0.0, 4.0, 173)
    cum = cumulative_areas(REG, times)
    assert cum[0] == 0.0
    direct = np.cumsum(
        [0.0] + [phase_area(REG, a, b) for a, b in zip(times[:-1], times[1:])])
    np.testing.assert_allclose(cum, direct, atol=1e-12)


def test_noisy_levels_frozen_anchor():
    """Seeded noisy windows reproduce frozen values bit for bit."""
    seq = PulseSequence(kind="noisy_rect", strength=1.5, duration=0.25,
                        period=0.5, noise=0.5, sign_policy="random_flip",
                        seed=11)
    got = [window_level(seq, m) for m in (1, 2, 3, 4)]
    expect = [-4.214344451189123, -8.38397022308763,
              -8.787222299307853, -3.88818582646115]
    assert got == expect
    assert phase_area(seq, 0.0, 2.1) == pytest.approx(-6.318430700011439,
                                                      abs=1e-12)


def test_levels_are_deterministic_per_seed():
    a = PulseSequence(kind="noisy_rect", strength=1.0, duration=0.1,
                      period=0.4, noise=0.3, sign_policy="random_flip", seed=5)
    b = PulseSequence(kind="noisy_rect", strength=1.0, duration=0.1,
                      period=0.4, noise=0.3, sign_policy="random_flip", seed=5)
    c = PulseSequence(kind="noisy_rect", strength=1.0, duration=0.1,
                      period=0.4, noise=0.3, sign_policy="random_flip", seed=6)
    la = [window_level(a, m) for m in range(1, 30)]
    lb = [window_level(b, m) for m in range(1, 30)]
    lc = [window_level(c, m) for m in range(1, 30)]
    assert la == lb
    assert la != lc


def test_noise_bounded():
    seq = PulseSequence(kind="noisy_rect", strength=1.0, duration=0.5,
                        period=1.0, noise=0.5, seed=99)
    base = 2.0
    for m in range(1, 200):
        assert 0.5 * base <= abs(window_level(seq, m)) <= 1.5 * base


def test_constant_policy_never_flips():
    seq = PulseSequence(kind="regular_rect", strength=1.0, duration=0.5,
                        period=1.0, sign_policy="constant", seed=0)
    assert all(window_level(seq, m) == 2.0 for m in range(1, 50))


def test_ideal_delta_kicks():
    # kick instants inside the half-open range [a, b)
    seq = PulseSequence(kind="ideal_delta", strength=np.pi, period=0.5, seed=0)
    assert pulse_value(seq, 0.5) == 0.0
    np.testing.assert_allclose(kick_times(seq, 0.0, 2.0), [0.5, 1.0, 1.5])
    np.testing.assert_allclose(kick_times(seq, 0.6, 1.4), [1.0])
    np.testing.assert_allclose(kick_times(seq, 0.0, 2.01), [0.5, 1.0, 1.5, 2.0])


def test_none_kind_is_silent():
    seq = PulseSequence()
    assert pulse_value(seq, 1.23) == 0.0
    assert phase_area(seq, 0.0, 10.0) == 0.0
    np.testing.assert_array_equal(cumulative_areas(None, np.arange(4.0)),
                                  np.zeros(4))


def test_validation_rejects_bad_shapes():
    with pytest.raises(ValueError):
        PulseSequence(kind="regular_rect", strength=1.0, duration=2.0,
                      period=1.0)
    with pytest.raises(ValueError):
        PulseSequence(kind="regular_rect", strength=1.0, duration=0.0,
                      period=1.0)
    with pytest.raises(ValueError):
        PulseSequence(kind="bogus")
    with pytest.raises(ValueError):
        PulseSequence(kind="noisy_rect", strength=1.0, duration=0.5,
                      period=1.0, noise=1.5)


def test_step_plan_splits_at_window_edges():
    grid = TimeGrid.from_step(0.0, 3.0, 0.3)
    seq = PulseSequence(kind="regular_rect", strength=3.0, duration=0.25,
                        period=1.0, seed=0)
    plan = StepPlan(grid, seq)
    # step [0.6, 0.9) contains the window edge at 0.75
    pieces = plan.pieces(2)
    assert pieces[0][:2] == (0.6, 0.75)
    assert pieces[-1][0] == 0.75
    # pieces tile each step exactly
    for k in range(grid.n_steps):
        ps = plan.pieces(k)
        assert ps[0][0] == pytest.approx(grid.time_at(k))
        assert ps[-1][1] == pytest.approx(grid.time_at(k + 1))
        for (a0, b0, _), (a1, b1, _) in zip(ps[:-1], ps[1:]):
            assert b0 == pytest.approx(a1)


def test_step_plan_resolves_fast_phase():
    """Substep count keeps |level| * dt below the phase cap."""
    grid = TimeGrid.from_step(0.0, 2.0, 0.1)
    seq = PulseSequence(kind="regular_rect", strength=3.0, duration=0.25,
                        period=1.0, seed=0)
    plan = StepPlan(grid, seq, weight=1.0)
    for k in range(grid.n_steps):
        for a, b, nsub in plan.pieces(k):
            mid = 0.5 * (a + b)
            lvl = abs(pulse_value(seq, mid))
            assert lvl * (b - a) / nsub <= 0.05 + 1e-12


def test_step_plan_without_pulses_is_trivial():
    grid = TimeGrid.from_count(0.0, 1.0, 4)
    plan = StepPlan(grid, None)
    assert plan.pieces(1) == [(0.25, 0.5, 1)]
    assert plan.n_substeps() == 4

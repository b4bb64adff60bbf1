import numpy as np
import pytest

from qleak.grids import TimeGrid


def test_from_step_rounds_to_integer_steps():
    g = TimeGrid.from_step(0.0, 10.0, 1e-3)
    assert g.n_steps == 10000
    assert g.n_nodes == 10001
    assert g.dt == pytest.approx(1e-3)


def test_from_count():
    g = TimeGrid.from_count(-2.0, 2.0, 8)
    assert g.n_steps == 8
    assert g.dt == pytest.approx(0.5)
    np.testing.assert_allclose(g.times(), np.linspace(-2.0, 2.0, 9))


def test_times_and_time_at_agree():
    g = TimeGrid.from_count(1.0, 4.0, 6)
    times = g.times()
    for k in range(g.n_nodes):
        assert g.time_at(k) == times[k]


def test_index_of_roundtrip():
    g = TimeGrid.from_step(0.0, 5.0, 0.25)
    for k in (0, 3, 20):
        assert g.index_of(g.time_at(k)) == k


def test_index_of_rejects_off_node():
    g = TimeGrid.from_count(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        g.index_of(0.123)


def test_inconsistent_span_rejected():
    with pytest.raises(ValueError):
        TimeGrid(t0=0.0, t1=1.0, dt=0.3, n_steps=3)


def test_nonpositive_step_rejected():
    with pytest.raises(ValueError):
        TimeGrid.from_count(0.0, -1.0, 10)

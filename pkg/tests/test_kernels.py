import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_hermitian, random_state
from qleak.generators import Generator
from qleak.grids import TimeGrid
from qleak.kernels import (MAX_KERNEL_NODES, MemoryKernel, kernel_from_blocks,
                           phase_integral)
from qleak.partition import pq_partition
from qleak.pulses import PulseSequence, cumulative_areas


def test_constant_kernel_rows():
    grid = TimeGrid.from_count(0.0, 1.0, 4)
    k = MemoryKernel.constant(2.0 - 1.0j, grid)
    np.testing.assert_array_equal(k.row(3), np.full(4, 2.0 - 1.0j))
    assert k.value(grid.time_at(3), grid.time_at(1)) == 2.0 - 1.0j
    assert k.delta_coeff == 0.0


def test_markov_kernel_is_pure_delta():
    grid = TimeGrid.from_count(0.0, 1.0, 4)
    k = MemoryKernel.markov(0.5, grid)
    assert k.delta_coeff == -1.0
    np.testing.assert_array_equal(k.row(2), np.zeros(3))


def test_from_callable_shape_validation():
    grid = TimeGrid.from_count(0.0, 1.0, 4)
    k = MemoryKernel.from_callable(lambda t, s: np.ones(2), grid)
    with pytest.raises(ValueError):
        k.row(3)


def test_from_table_roundtrip():
    grid = TimeGrid.from_count(0.0, 1.0, 3)
    rows = [np.array([1.0 + 0j]), np.array([2.0, 3.0j]),
            np.array([4.0, 5.0, 6.0]), np.array([7.0, 8.0, 9.0, 10.0])]
    packed = np.concatenate(rows)
    k = MemoryKernel.from_table(packed, grid)
    for i in range(4):
        np.testing.assert_array_equal(k.row(i), rows[i])
    assert k.value(grid.time_at(2), grid.time_at(1)) == 5.0


def test_node_cap_enforced():
    grid = TimeGrid.from_count(0.0, 1.0, MAX_KERNEL_NODES + 10)
    gen = Generator.from_hamiltonian(2, lambda t: np.eye(2, dtype=complex))
    blocks = pq_partition(gen, np.array([1.0, 0.0], dtype=complex))
    with pytest.raises(ValueError):
        kernel_from_blocks(blocks, grid)


def test_kernel_from_blocks_constant_oracle(rng):
    """Constant blocks: g(t, s) = R expm(D (t - s)) W, checked entrywise."""
    n = 4
    h = random_hermitian(rng, n)
    gen = Generator.from_hamiltonian(n, lambda t: h)
    blocks = pq_partition(gen, random_state(rng, n))
    grid = TimeGrid.from_step(0.0, 2.0, 0.01)
    kern = kernel_from_blocks(blocks, grid)
    r0, w0, d0 = blocks.R(0.0), blocks.W(0.0), blocks.D(0.0)
    worst = 0.0
    for i in range(0, grid.n_nodes, 20):
        row = kern.row(i)
        for j in range(0, i + 1, 20):
            exact = r0 @ expm(d0 * (grid.time_at(i) - grid.time_at(j))) @ w0
            worst = max(worst, abs(row[j] - exact))
    assert worst < 1e-8


def test_kernel_diagonal_is_rw_product(rng):
    """g(t, t) = R(t) W(t) holds with no propagation error at all."""
    n = 5
    h0 = random_hermitian(rng, n)
    h1 = random_hermitian(rng, n, scale=0.3)
    gen = Generator.from_hamiltonian(n, lambda t: h0 + np.sin(t) * h1)
    blocks = pq_partition(gen, random_state(rng, n))
    grid = TimeGrid.from_step(0.0, 1.0, 0.05)
    kern = kernel_from_blocks(blocks, grid)
    for i in (0, 7, 20):
        t = grid.time_at(i)
        assert abs(kern.row(i)[i] - blocks.R(t) @ blocks.W(t)) < 1e-10


def test_kernel_schemes_cross_validate(rng):
    n = 4
    h0 = random_hermitian(rng, n)
    h1 = random_hermitian(rng, n, scale=0.4)
    gen = Generator.from_hamiltonian(n, lambda t: h0 + np.cos(2 * t) * h1)
    blocks = pq_partition(gen, random_state(rng, n))
    grid = TimeGrid.from_step(0.0, 1.0, 2e-3)
    k_rk4 = kernel_from_blocks(blocks, grid, scheme="rk4")
    k_mag = kernel_from_blocks(blocks, grid, scheme="magnus2")
    i = grid.n_steps
    assert np.max(np.abs(k_rk4.row(i) - k_mag.row(i))) < 1e-5


def test_dressed_multiplies_relative_phase():
    grid = TimeGrid.from_count(0.0, 1.0, 5)
    base = MemoryKernel.constant(1.0, grid, delta_coeff=-0.4)
    areas = np.linspace(0.0, 2.0, grid.n_nodes) ** 2
    dressed = base.dressed(areas, weight=1.5)
    i = 4
    expect = np.exp(1.5j * (areas[i] - areas[:i + 1]))
    np.testing.assert_allclose(dressed.row(i), expect, atol=1e-14)
    # the delta part never acquires phase: C(t) - C(s) = 0 at s = t
    assert dressed.delta_coeff == base.delta_coeff


def test_phase_integral_real_for_imaginary_h():
    grid = TimeGrid.from_step(0.0, 2.0, 1e-2)
    acc = phase_integral(lambda t: -1.3j, grid)
    assert np.max(np.abs(acc.C.imag)) < 1e-14
    np.testing.assert_allclose(acc.C.real, 1.3 * grid.times(), atol=1e-12)


def test_phase_integral_adds_exact_pulse_areas():
    grid = TimeGrid.from_step(0.0, 3.0, 1e-2)
    seq = PulseSequence(kind="regular_rect", strength=0.8, duration=0.25,
                        period=1.0, seed=2)
    acc = phase_integral(None, grid, pulses=seq, pulse_weight=2.0)
    expect = 2.0 * cumulative_areas(seq, grid.times())
    np.testing.assert_allclose(acc.C, expect, atol=1e-13)


def test_phase_integral_rejects_nonfinite():
    grid = TimeGrid.from_count(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        phase_integral(lambda t: np.inf, grid)

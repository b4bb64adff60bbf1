import numpy as np
import pytest

from conftest import random_hermitian, random_state
from qleak.generators import Generator
from qleak.grids import TimeGrid
from qleak.partition import complete_basis, pq_partition
from qleak.propagators import propagate, time_ordered_propagator


def test_basis_is_unitary(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        b = complete_basis(random_state(rng, n))
        assert np.max(np.abs(b.conj().T @ b - np.eye(n))) < 1e-12


def test_basis_near_canonical_target():
    """A target almost along e0 must not produce a degenerate basis."""
    v = np.array([1.0, 3e-9, 0.0], dtype=complex)
    v /= np.linalg.norm(v)
    b = complete_basis(v)
    assert np.max(np.abs(b.conj().T @ b - np.eye(3))) < 1e-12


def test_unnormalized_target_rejected():
    with pytest.raises(ValueError):
        complete_basis(np.array([1.0, 1.0]))


def test_reassembly(rng):
    """B [h R; W D] B^dag must reproduce M(t) to 1e-12, 100 seeded draws."""
    for seed in range(100):
        r = np.random.default_rng(seed)
        n = int(r.integers(2, 9))
        h0 = random_hermitian(r, n)
        h1 = random_hermitian(r, n, scale=0.5)
        gen = Generator.from_hamiltonian(n, lambda t: h0 + t * h1)
        blocks = pq_partition(gen, random_state(r, n))
        t = 0.7
        m = np.empty((n, n), dtype=complex)
        m[0, 0] = blocks.h(t)
        m[0, 1:] = blocks.R(t)
        m[1:, 0] = blocks.W(t)
        m[1:, 1:] = blocks.D(t)
        back = blocks.basis @ m @ blocks.basis.conj().T
        assert np.max(np.abs(back - gen(t))) < 1e-12


def test_block_shapes(rng):
    gen = Generator.from_hamiltonian(5, lambda t: random_hermitian(
        np.random.default_rng(3), 5))
    blocks = pq_partition(gen, random_state(rng, 5))
    assert isinstance(blocks.h(0.0), complex)
    assert blocks.R(0.0).shape == (4,)
    assert blocks.W(0.0).shape == (4,)
    assert blocks.D(0.0).shape == (4, 4)


def test_hermitian_block_structure(rng):
    """For M = -iH the split obeys h anti-real, W = -R^dag, D anti-Hermitian."""
    n = 6
    h = random_hermitian(rng, n)
    blocks = pq_partition(Generator.from_hamiltonian(n, lambda t: h),
                          random_state(rng, n))
    assert abs(blocks.h(0.0).real) < 1e-14
    assert np.max(np.abs(blocks.W(0.0) + blocks.R(0.0).conj())) < 1e-13
    d = blocks.D(0.0)
    assert np.max(np.abs(d + d.conj().T)) < 1e-13


def test_decoupled_q_subspace_propagation(rng):
    """With R = W = 0 the Q dynamics is exactly the ordered exponential of D."""
    n = 4
    target = np.zeros(n, dtype=complex)
    target[0] = 1.0
    d_fn_seed = random_hermitian(rng, n - 1)

    def m_fn(t):
        m = np.zeros((n, n), dtype=complex)
        m[0, 0] = 0.2j
        m[1:, 1:] = -1j * (1.0 + 0.3 * np.sin(t)) * d_fn_seed
        return m

    gen = Generator(n, m_fn)
    blocks = pq_partition(gen, target)
    grid = TimeGrid.from_step(0.0, 2.0, 1e-3)
    g = time_ordered_propagator(lambda t: blocks.D(t), 0.0, 2.0, grid)
    x0 = np.zeros(n, dtype=complex)
    x0[1:] = random_state(rng, n - 1)
    full = propagate(gen, x0, grid)
    assert np.max(np.abs(full[-1][1:] - g @ x0[1:])) < 1e-8
    assert abs(full[-1][0]) < 1e-14


def test_partition_dim_mismatch():
    gen = Generator.constant(np.eye(3))
    with pytest.raises(ValueError):
        pq_partition(gen, np.array([1.0, 0.0]))

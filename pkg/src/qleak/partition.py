"""Splitting a generator into target and complement blocks.

The state is separated into a one-dimensional component along a target
direction and everything orthogonal to it. In the completed orthonormal
basis {target, q_1, ..., q_{n-1}} the generator becomes

    [ h  R ]
    [ W  D ]

with scalar h, row R, column W and square D.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .generators import Generator

TARGET_NORM_ATOL = 1e-12
# canonical vectors closer than this to the span already built are skipped
GS_SKIP_THRESHOLD = 1e-8


def complete_basis(target: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal completion of a unit vector.

    Gram-Schmidt over the canonical basis vectors in index order, skipping
    any whose residual is below GS_SKIP_THRESHOLD. Returns a matrix whose
    columns are [target, q_1, ..., q_{n-1}].
    """
    target = np.asarray(target, dtype=complex)
    n = target.shape[0]
    norm = np.linalg.norm(target)
    if norm == 0:
        raise ValueError("target vector has zero norm")
    if abs(norm - 1.0) > TARGET_NORM_ATOL:
        raise ValueError(f"target must be normalized to 1e-12, |v| = {float(norm):.6g}")
    cols = [target]
    for i in range(n):
        if len(cols) == n:
            break
        v = np.zeros(n, dtype=complex)
        v[i] = 1.0
        for c in cols:
            v = v - c * (c.conj() @ v)
        r = np.linalg.norm(v)
        if r < GS_SKIP_THRESHOLD:
            continue
        cols.append(v / r)
    if len(cols) != n:
        raise RuntimeError("basis completion failed")  # unreachable for unit target
    return np.column_stack(cols)


@dataclass(frozen=True)
class PQBlocks:
    """The (h, R, W, D) split of a generator along a target direction.

    All four block accessors are functions of time. ``basis`` holds the
    completed orthonormal basis as columns, target first.
    """

    target: np.ndarray
    basis: np.ndarray
    gen: Generator

    def conjugated(self, t: float) -> np.ndarray:
        """Full generator in the completed basis: B^dag M(t) B."""
        return self.basis.conj().T @ self.gen(t) @ self.basis

    def h(self, t: float) -> complex:
        return complex(self.basis[:, 0].conj() @ self.gen(t) @ self.basis[:, 0])

    def R(self, t: float) -> np.ndarray:
        m = self.conjugated(t)
        return m[0, 1:]

    def W(self, t: float) -> np.ndarray:
        m = self.conjugated(t)
        return m[1:, 0]

    def D(self, t: float) -> np.ndarray:
        m = self.conjugated(t)
        return m[1:, 1:]

    @property
    def dim(self) -> int:
        return self.gen.dim


def pq_partition(gen: Generator, target: np.ndarray) -> PQBlocks:
    """Partition a generator relative to a normalized target direction."""
    target = np.asarray(target, dtype=complex)
    if target.shape != (gen.dim,):
        raise ValueError(
            f"target shape {target.shape} does not match generator dim {gen.dim}"
        )
    basis = complete_basis(target)
    return PQBlocks(target=target, basis=basis, gen=gen)

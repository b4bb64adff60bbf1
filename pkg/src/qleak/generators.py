"""Time-dependent generators of linear dynamics dX/dt = M(t) X."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

HERMITIAN_ATOL = 1e-12


class Generator:
    """An n x n complex matrix function M(t) driving dX/dt = M(t) X.

    When ``hermitian`` is set, M(t) = -i H(t) with H Hermitian; this is
    verified (M + M^dagger = 0 to 1e-12) at every evaluation, and the
    underlying Hamiltonian is available through :meth:`hamiltonian`.
    """

    def __init__(self, dim: int, eval_fn: Callable[[float], np.ndarray],
                 hermitian: bool = False):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self._eval = eval_fn
        self.hermitian = hermitian

    def __call__(self, t: float) -> np.ndarray:
        m = np.asarray(self._eval(t), dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(
                f"generator returned shape {m.shape}, expected {(self.dim, self.dim)}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError(f"generator has non-finite entries at t={t}")
        if self.hermitian:
            dev = np.max(np.abs(m + m.conj().T))
            if dev > HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(m)))):
                raise ValueError(
                    f"hermitian-flagged generator violates M + M^dag = 0 "
                    f"at t={t} (deviation {dev:.3e})"
                )
        return m

    def hamiltonian(self, t: float) -> np.ndarray:
        """H(t) = i M(t); only meaningful for hermitian-flagged generators."""
        if not self.hermitian:
            raise ValueError("hamiltonian() requires a hermitian-flagged generator")
        return 1j * self(t)

    @classmethod
    def constant(cls, m: np.ndarray, hermitian: Optional[bool] = None) -> "Generator":
        """Generator from a fixed matrix. Auto-detects the Hermitian flag."""
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if hermitian is None:
            scale = max(1.0, float(np.max(np.abs(m))))
            hermitian = bool(np.max(np.abs(m + m.conj().T)) <= HERMITIAN_ATOL * scale)
        return cls(m.shape[0], lambda t, _m=m: _m, hermitian=hermitian)

    @classmethod
    def from_hamiltonian(cls, dim: int,
                         h_fn: Callable[[float], np.ndarray]) -> "Generator":
        """Generator M(t) = -i H(t) from a Hermitian matrix function."""
        return cls(dim, lambda t: -1j * np.asarray(h_fn(t), dtype=complex),
                   hermitian=True)

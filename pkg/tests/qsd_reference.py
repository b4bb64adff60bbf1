"""Slow reference implementations used only as oracles in tests."""
import numpy as np


def coefficients_double_grid(energies, couplings, gamma, t_final, dt):
    """March the two-time kernel f_j(t, s) on a full (t, s) grid.

    f_j grows in t by the shared scalar rate i(E_0 - E_j) + sum conj(k) F_k
    from its diagonal value f_j(s, s) = kappa_j, and F_j(t) is the memory
    integral of (gamma/2) e^{-gamma (t-s)} f_j(t, s) over s, evaluated by
    trapezoid. Heun predictor-corrector in t. Nothing here differentiates
    F, so the result is an independent check of the closed coefficient ODE.

    Returns (times, F) with F of shape (n_nodes, n-1).
    """
    kap = np.asarray(couplings, dtype=complex)
    e = np.asarray(energies, dtype=float)
    nj = kap.size
    ns = int(round(t_final / dt))
    times = dt * np.arange(ns + 1)
    f = np.empty((ns + 1, nj), dtype=complex)
    f[0] = kap
    F = np.zeros((ns + 1, nj), dtype=complex)
    kapc = kap.conj()
    drift0 = 1j * (e[0] - e[1:])

    def memory_quad(k, rows):
        if k == 0:
            return np.zeros(nj, dtype=complex)
        w = 0.5 * gamma * np.exp(-gamma * (times[k] - times[:k + 1]))
        return np.trapezoid(w[:, None] * rows[:k + 1], dx=dt, axis=0)

    for k in range(ns):
        rows = f[:k + 1]
        bk = drift0 + kapc @ F[k]
        pred = np.empty((k + 2, nj), dtype=complex)
        pred[:k + 1] = rows * (1.0 + dt * bk)
        pred[k + 1] = kap
        bp = drift0 + kapc @ memory_quad(k + 1, pred)
        f[:k + 1] = rows + (0.5 * dt) * (bk * rows + bp * pred[:k + 1])
        f[k + 1] = kap
        F[k + 1] = memory_quad(k + 1, f)
    return times, F

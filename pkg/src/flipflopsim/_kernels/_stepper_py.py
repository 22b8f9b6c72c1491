"""Pure-numpy fallback for the piecewise propagation kernel.

Applies the step unitaries U_k = expm(-2j*pi*H_k*dt_k) in sequence to a
state vector or density matrix.  Hamiltonians are Hermitian 4x4 blocks in
MHz, time steps in microseconds.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _step_unitaries(h_stack: np.ndarray, dts: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h_stack)
    phases = np.exp(-2j * np.pi * vals * dts[:, None])
    return np.einsum("nij,nj,nkj->nik", vecs, phases, np.conj(vecs))


def propagate_vector(psi: np.ndarray, h_stack: np.ndarray, dts: np.ndarray) -> np.ndarray:
    us = _step_unitaries(np.asarray(h_stack, dtype=complex), np.asarray(dts, dtype=float))
    out = np.asarray(psi, dtype=complex).copy()
    for u in us:
        out = u @ out
    return out


def propagate_density(rho: np.ndarray, h_stack: np.ndarray, dts: np.ndarray) -> np.ndarray:
    us = _step_unitaries(np.asarray(h_stack, dtype=complex), np.asarray(dts, dtype=float))
    out = np.asarray(rho, dtype=complex).copy()
    for u in us:
        out = u @ out @ np.conj(u.T)
    return out

"""Quantum state container for the 4-level donor system.

States are expressed in the energy eigenbasis of the static Hamiltonian,
whose levels are labeled by their dominant product character
(|↑⇑>, |↑⇓>, |↓⇑>, |↓⇓>).  At the operating field the eigenbasis and the
product basis coincide to order A / (gamma_+ B0), and single-shot readout
discriminates energy eigenstates, so this is the measurement basis.
"""

from __future__ import annotations

import numpy as np

from .hamiltonian import BASIS_LABELS

_NORM_TOL = 1e-9


class QuantumState:
    """Pure state vector or density matrix over the 4 donor levels."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=complex)
        if data.shape == (4,):
            self._vector = data
            self._matrix = None
        elif data.shape == (4, 4):
            self._vector = None
            self._matrix = data
        else:
            raise ValueError(f"expected shape (4,) or (4, 4), got {data.shape}")
        self.validate()

    # -- constructors -------------------------------------------------

    @classmethod
    def basis_state(cls, index: int) -> "QuantumState":
        vec = np.zeros(4, dtype=complex)
        vec[index] = 1.0
        return cls(vec)

    @classmethod
    def mixed(cls, populations) -> "QuantumState":
        p = np.asarray(populations, dtype=float)
        return cls(np.diag(p).astype(complex))

    # -- accessors ----------------------------------------------------

    @property
    def is_pure(self) -> bool:
        return self._vector is not None

    @property
    def vector(self) -> np.ndarray:
        if self._vector is None:
            raise ValueError("state is a density matrix")
        return self._vector

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            return np.outer(self._vector, np.conj(self._vector))
        return self._matrix

    def populations(self) -> np.ndarray:
        if self._vector is not None:
            return np.abs(self._vector) ** 2
        return np.real(np.diag(self._matrix))

    def population(self, index: int) -> float:
        return float(self.populations()[index])

    def electron_up_population(self) -> float:
        p = self.populations()
        return float(p[0] + p[1])

    def nuclear_up_population(self) -> float:
        p = self.populations()
        return float(p[0] + p[2])

    # -- transforms ---------------------------------------------------

    def apply_unitary(self, u: np.ndarray) -> "QuantumState":
        if self._vector is not None:
            return QuantumState(u @ self._vector)
        return QuantumState(u @ self._matrix @ np.conj(u.T))

    def dephased(self) -> "QuantumState":
        """Populations only; coherences dropped (used across long delays)."""
        return QuantumState(np.diag(self.populations().astype(complex)))

    # -- checks -------------------------------------------------------

    def validate(self):
        if self._vector is not None:
            norm = np.linalg.norm(self._vector)
            if abs(norm - 1.0) > _NORM_TOL:
                raise ValueError(f"pure state norm {norm} deviates from 1")
        else:
            m = self._matrix
            if np.linalg.norm(m - np.conj(m.T)) > 1e-9 * max(np.linalg.norm(m), 1.0):
                raise ValueError("density matrix is not Hermitian")
            tr = np.real(np.trace(m))
            if abs(tr - 1.0) > _NORM_TOL:
                raise ValueError(f"density matrix trace {tr} deviates from 1")
            if np.linalg.eigvalsh(m).min() < -1e-9:
                raise ValueError("density matrix is not positive semidefinite")

    def __repr__(self):
        pops = ", ".join(
            f"{lbl}={p:.4f}" for lbl, p in zip(BASIS_LABELS, self.populations())
        )
        kind = "pure" if self.is_pure else "mixed"
        return f"QuantumState({kind}; {pops})"

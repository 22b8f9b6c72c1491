"""Donor spin Hamiltonian: construction, diagonalization and closed forms.

Basis order is fixed as (up-Up, up-Down, down-Up, down-Down), i.e.
(electron, nucleus) = (|↑⇑>, |↑⇓>, |↓⇑>, |↓⇓>).  Indices:

    0: |↑⇑>    1: |↑⇓>    2: |↓⇑>    3: |↓⇓>

The flip-flop qubit lives on levels (1, 2).  All matrix entries are in MHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import DonorParameters, PhysicalConstants

# Basis indices.
UP_UP = 0      # |↑⇑>
UP_DOWN = 1    # |↑⇓>
DOWN_UP = 2    # |↓⇑>
DOWN_DOWN = 3  # |↓⇓>

BASIS_LABELS = ("up-Up", "up-Down", "down-Up", "down-Down")

#: The two flip-flop levels (upper, lower) in the basis above.
FLIPFLOP_PAIR = (UP_DOWN, DOWN_UP)

# Spin-1/2 operators (dimensionless).
_SX = np.array([[0.0, 0.5], [0.5, 0.0]])
_SY = np.array([[0.0, -0.5j], [0.5j, 0.0]])
_SZ = np.array([[0.5, 0.0], [0.0, -0.5]])
_ID = np.eye(2)


def spin_dot_spin() -> np.ndarray:
    """S.I operator on the 4-dim product space (electron (x) nucleus)."""
    out = np.zeros((4, 4), dtype=complex)
    for op in (_SX, _SY, _SZ):
        out += np.kron(op, op)
    return out


def electron_flip_operator() -> np.ndarray:
    """2*Sx on the electron: unit matrix elements between ESR-coupled pairs."""
    return np.kron(2.0 * _SX, _ID).astype(complex)


def nuclear_flip_operator() -> np.ndarray:
    """2*Ix on the nucleus: unit matrix elements between NMR-coupled pairs."""
    return np.kron(_ID, 2.0 * _SX).astype(complex)


def build_full_hamiltonian(
    params: DonorParameters, constants: PhysicalConstants | None = None
) -> np.ndarray:
    """Full 4x4 donor Hamiltonian in MHz.

    H = gamma_e B0 Sz - gamma_n B0 Iz + A S.I with both gyromagnetic ratios
    positive, expressed in the product basis documented at module level.
    """
    constants = constants or PhysicalConstants()
    ge = constants.gamma_e_mhz_per_t * params.b0_t
    gn = constants.gamma_n_mhz_per_t * params.b0_t
    a = params.a_hf_mhz
    h = (
        ge * np.kron(_SZ, _ID)
        - gn * np.kron(_ID, _SZ)
        + a * spin_dot_spin()
    )
    return h.astype(complex)


def truncate_flipflop(h: np.ndarray) -> np.ndarray:
    """2x2 sub-block of the full Hamiltonian over (|↑⇓>, |↓⇑>).

    Keeps the -A/2 identity offset present in the full matrix, so the
    eigenvalues match the corresponding full-Hamiltonian levels.
    """
    idx = np.array(FLIPFLOP_PAIR)
    return h[np.ix_(idx, idx)]


@dataclass(frozen=True)
class TransitionFrequencies:
    """Closed-form resonance frequencies.

    ESR and flip-flop frequencies in GHz, NMR frequencies in MHz.  The exact
    splittings are exposed as accessors so identities like
    ``esr2 - esr1 == A`` hold without floating-point cancellation.
    """

    esr1_ghz: float
    esr2_ghz: float
    nmr1_mhz: float
    nmr2_mhz: float
    ff_ghz: float
    a_hf_mhz: float

    @property
    def esr_splitting_mhz(self) -> float:
        """esr2 - esr1, exactly the hyperfine coupling."""
        return self.a_hf_mhz

    @property
    def nmr_sum_mhz(self) -> float:
        """nmr1 + nmr2, exactly the hyperfine coupling."""
        return self.a_hf_mhz


def transition_frequencies(
    params: DonorParameters, constants: PhysicalConstants | None = None
) -> TransitionFrequencies:
    """All closed-form transition frequencies of the donor system.

    esr1/2 = gamma_e B0 -/+ A/2 (nuclear ⇓ / ⇑ manifolds)
    nmr1/2 = A/2 +/- gamma_n B0 (electron ↓ / ↑ manifolds)
    ff     = sqrt((gamma_+ B0)^2 + A^2)
    """
    constants = constants or PhysicalConstants()
    ge_mhz = constants.gamma_e_mhz_per_t * params.b0_t
    gn_mhz = constants.gamma_n_mhz_per_t * params.b0_t
    gp_mhz = constants.gamma_plus_mhz_per_t * params.b0_t
    a = params.a_hf_mhz
    return TransitionFrequencies(
        esr1_ghz=(ge_mhz - a / 2.0) * 1e-3,
        esr2_ghz=(ge_mhz + a / 2.0) * 1e-3,
        nmr1_mhz=a / 2.0 + gn_mhz,
        nmr2_mhz=a / 2.0 - gn_mhz,
        ff_ghz=np.hypot(gp_mhz, a) * 1e-3,
        a_hf_mhz=a,
    )


def flipflop_gap_mhz(
    params: DonorParameters, constants: PhysicalConstants | None = None
) -> float:
    """Closed-form flip-flop resonance sqrt((gamma_+ B0)^2 + A^2), MHz."""
    constants = constants or PhysicalConstants()
    return float(
        np.hypot(constants.gamma_plus_mhz_per_t * params.b0_t, params.a_hf_mhz)
    )


def flipflop_rabi_frequency(
    stark_slope_khz_per_v: float, drive_amplitude_at_gate_v: float
) -> float:
    """EDSR Rabi frequency in kHz for a given drive amplitude at the gate.

    f_Rabi = (1/2) * dA/dV * dV; the factor 1/2 comes from the rotating
    wave approximation of the hyperfine modulation.
    """
    if drive_amplitude_at_gate_v < 0:
        raise ValueError("drive amplitude must be >= 0")
    return 0.5 * stark_slope_khz_per_v * drive_amplitude_at_gate_v


def eigensystem(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of ``h``, ordered by dominant basis state.

    Column ``k`` of the returned eigenvector matrix is the eigenstate with
    the largest overlap with product basis state ``k``, with its phase fixed
    so that the dominant component is real positive.  At the operating field
    the mapping is unambiguous (mixing is of order A / (gamma_+ B0)).
    """
    vals, vecs = np.linalg.eigh(h)
    order = np.argmax(np.abs(vecs), axis=0)
    if len(set(order.tolist())) != 4:
        # Degenerate / strongly mixed regime: keep ascending-energy order.
        perm = np.arange(4)
    else:
        perm = np.empty(4, dtype=int)
        perm[order] = np.arange(4)
    vals = vals[perm]
    vecs = vecs[:, perm]
    for k in range(4):
        phase = vecs[np.argmax(np.abs(vecs[:, k])), k]
        if abs(phase) > 0:
            vecs[:, k] *= np.conj(phase) / abs(phase)
    return vals, vecs

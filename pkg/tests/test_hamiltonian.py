"""Hamiltonian construction, closed-form frequencies and eigensystem."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipflopsim.constants import DonorParameters, PhysicalConstants
from flipflopsim.hamiltonian import (
    DOWN_DOWN,
    DOWN_UP,
    FLIPFLOP_PAIR,
    UP_DOWN,
    UP_UP,
    build_full_hamiltonian,
    eigensystem,
    electron_flip_operator,
    flipflop_gap_mhz,
    flipflop_rabi_frequency,
    nuclear_flip_operator,
    spin_dot_spin,
    transition_frequencies,
    truncate_flipflop,
)


def test_basis_indices():
    assert (UP_UP, UP_DOWN, DOWN_UP, DOWN_DOWN) == (0, 1, 2, 3)
    assert FLIPFLOP_PAIR == (UP_DOWN, DOWN_UP)


def test_hamiltonian_is_hermitian():
    h = build_full_hamiltonian(DonorParameters())
    assert np.allclose(h, np.conj(h.T))


def test_hamiltonian_matrix_entries():
    # H = ge*B0*Sz - gn*B0*Iz + A*S.I written out explicitly, in MHz.
    params = DonorParameters(b0_t=1.0, a_hf_mhz=114.1)
    c = PhysicalConstants()
    ge = c.gamma_e_mhz_per_t
    gn = c.gamma_n_mhz_per_t
    a = params.a_hf_mhz
    expected = np.array(
        [
            [ge / 2 - gn / 2 + a / 4, 0, 0, 0],
            [0, ge / 2 + gn / 2 - a / 4, a / 2, 0],
            [0, a / 2, -ge / 2 - gn / 2 - a / 4, 0],
            [0, 0, 0, -ge / 2 + gn / 2 + a / 4],
        ],
        dtype=complex,
    )
    assert np.allclose(build_full_hamiltonian(params, c), expected, atol=1e-12)


def test_spin_dot_spin_trace_and_eigenvalues():
    sdots = spin_dot_spin()
    assert abs(np.trace(sdots)) < 1e-12
    # S.I has eigenvalues 1/4 (triplet, x3) and -3/4 (singlet).
    vals = np.sort(np.linalg.eigvalsh(sdots))
    assert np.allclose(vals, [-0.75, 0.25, 0.25, 0.25])


def test_flip_operators_couple_expected_pairs():
    ex = electron_flip_operator()
    assert ex[UP_DOWN, DOWN_DOWN] == 1.0 and ex[UP_UP, DOWN_UP] == 1.0
    assert ex[UP_DOWN, DOWN_UP] == 0.0
    nx = nuclear_flip_operator()
    assert nx[DOWN_DOWN, DOWN_UP] == 1.0 and nx[UP_UP, UP_DOWN] == 1.0
    assert nx[UP_DOWN, DOWN_UP] == 0.0


def test_truncate_flipflop_block():
    h = build_full_hamiltonian(DonorParameters())
    block = truncate_flipflop(h)
    assert block.shape == (2, 2)
    assert block[0, 0] == h[UP_DOWN, UP_DOWN]
    assert block[0, 1] == h[UP_DOWN, DOWN_UP]


def test_transition_frequency_identities():
    params = DonorParameters(b0_t=0.9, a_hf_mhz=114.1)
    f = transition_frequencies(params)
    # Exact splitting identities hold without cancellation error.
    assert f.esr_splitting_mhz == params.a_hf_mhz
    assert f.nmr_sum_mhz == params.a_hf_mhz
    assert math.isclose((f.esr2_ghz - f.esr1_ghz) * 1e3, params.a_hf_mhz, rel_tol=1e-9)
    assert math.isclose(f.nmr1_mhz + f.nmr2_mhz, params.a_hf_mhz, rel_tol=1e-12)


def test_closed_form_values_at_operating_point():
    # Frozen closed-form values at B0 = 1 T, A = 114.1 MHz, gamma_n = 17.23.
    f = transition_frequencies(DonorParameters(b0_t=1.0, a_hf_mhz=114.1))
    assert math.isclose(f.esr1_ghz, (27970.0 - 57.05) * 1e-3, rel_tol=1e-12)
    assert math.isclose(f.esr2_ghz, (27970.0 + 57.05) * 1e-3, rel_tol=1e-12)
    assert math.isclose(f.nmr1_mhz, 57.05 + 17.23, rel_tol=1e-12)
    assert math.isclose(f.nmr2_mhz, 57.05 - 17.23, rel_tol=1e-12)
    expected_ff = math.hypot(27970.0 + 17.23, 114.1)
    assert math.isclose(f.ff_ghz * 1e3, expected_ff, rel_tol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    b0=st.floats(min_value=0.2, max_value=2.0),
    a=st.floats(min_value=10.0, max_value=500.0),
)
def test_eigengap_matches_closed_form(b0, a):
    # The exact flip-flop eigen-gap equals sqrt((gamma_+ B0)^2 + A^2).
    params = DonorParameters(b0_t=b0, a_hf_mhz=a)
    vals, _ = eigensystem(build_full_hamiltonian(params))
    gap = vals[UP_DOWN] - vals[DOWN_UP]
    assert math.isclose(gap, flipflop_gap_mhz(params), rel_tol=1e-9)


def test_eigensystem_ordering_and_phases():
    vals, vecs = eigensystem(build_full_hamiltonian(DonorParameters()))
    for k in range(4):
        # Dominant component on the diagonal, real positive.
        assert np.argmax(np.abs(vecs[:, k])) == k
        assert vecs[k, k].real > 0.99
        assert abs(vecs[k, k].imag) < 1e-12
    # Unitary columns.
    assert np.allclose(np.conj(vecs.T) @ vecs, np.eye(4), atol=1e-12)


def test_eigensystem_reconstructs_hamiltonian():
    h = build_full_hamiltonian(DonorParameters())
    vals, vecs = eigensystem(h)
    assert np.allclose(vecs @ np.diag(vals) @ np.conj(vecs.T), h, atol=1e-9)


def test_flipflop_rabi_frequency():
    assert flipflop_rabi_frequency(512.0, 1.0) == 256.0
    assert flipflop_rabi_frequency(512.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        flipflop_rabi_frequency(512.0, -1.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        DonorParameters(b0_t=-1.0)
    with pytest.raises(ValueError):
        DonorParameters(a_hf_mhz=-5.0)
    with pytest.raises(ValueError):
        PhysicalConstants(gamma_e_ghz_per_t=-1.0)

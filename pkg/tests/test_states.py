"""QuantumState container: constructors, populations, transforms, validation."""

import numpy as np
import pytest

from flipflopsim.hamiltonian import DOWN_DOWN, DOWN_UP, UP_DOWN, UP_UP
from flipflopsim.states import QuantumState


def test_basis_state_populations():
    s = QuantumState.basis_state(DOWN_UP)
    assert s.is_pure
    assert s.population(DOWN_UP) == 1.0
    assert s.electron_up_population() == 0.0
    assert s.nuclear_up_population() == 1.0


def test_mixed_state():
    s = QuantumState.mixed([0.25, 0.25, 0.25, 0.25])
    assert not s.is_pure
    assert np.allclose(s.populations(), 0.25)
    assert s.electron_up_population() == pytest.approx(0.5)


def test_vector_and_matrix_accessors():
    s = QuantumState.basis_state(UP_UP)
    assert np.allclose(s.matrix, np.outer(s.vector, np.conj(s.vector)))
    m = QuantumState.mixed([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        _ = m.vector


def test_apply_unitary_preserves_norm():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    u = np.linalg.qr(a)[0]
    s = QuantumState.basis_state(UP_DOWN).apply_unitary(u)
    assert np.isclose(s.populations().sum(), 1.0)


def test_dephased_keeps_populations():
    vec = np.array([0.5, 0.5, 0.5, 0.5], dtype=complex)
    s = QuantumState(vec)
    d = s.dephased()
    assert not d.is_pure
    assert np.allclose(d.populations(), s.populations())
    assert np.allclose(d.matrix, np.diag(s.populations()).astype(complex))


def test_validation_rejects_bad_states():
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 1.0, 0.0, 0.0]))  # unnormalized
    with pytest.raises(ValueError):
        QuantumState(np.zeros((3,)))  # wrong shape
    with pytest.raises(ValueError):
        QuantumState(np.diag([0.5, 0.5, 0.5, -0.5]).astype(complex))  # not PSD
    bad = np.diag([0.25, 0.25, 0.25, 0.25]).astype(complex)
    bad[0, 1] = 0.1
    with pytest.raises(ValueError):
        QuantumState(bad)  # not Hermitian


def test_repr_mentions_levels():
    text = repr(QuantumState.basis_state(DOWN_DOWN))
    assert "down-Down=1.0000" in text

"""Single-shot electron readout, QND nuclear readout and initialization.

Readout is modeled classically on top of the quantum state: the state is
projected onto a basis level, spin-dependent tunneling then either emits a
current blip (electron up) or not (electron down), and the dot is reloaded
with a down electron.  The nuclear projection is never touched by electron
readout, so nuclear measurement is quantum non-demolition by construction
and can be repeated to arbitrary fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import DOWN_DOWN, DOWN_UP, UP_DOWN, UP_UP
from .noise import NoiseEnvironment
from .states import QuantumState

#: Electron-up levels and the nuclear-preserving reload map (up -> down).
_ELECTRON_UP = (UP_UP, UP_DOWN)
_RELOAD = {UP_UP: DOWN_UP, UP_DOWN: DOWN_DOWN, DOWN_UP: DOWN_UP, DOWN_DOWN: DOWN_DOWN}
_FLIP_ELECTRON = {UP_UP: DOWN_UP, UP_DOWN: DOWN_DOWN, DOWN_UP: UP_UP, DOWN_DOWN: UP_DOWN}
_NUCLEAR_UP = (UP_UP, DOWN_UP)


@dataclass(frozen=True)
class ReadoutParams:
    """Spin-dependent tunneling parameters (rates in 1/ms, window in ms)."""

    tunnel_out_rate: float = 10.0
    tunnel_in_rate: float = 100.0
    detection_window: float = 0.3
    blip_miss_probability: float = 0.0
    dark_blip_probability: float = 0.0
    #: Probability that the reload leaves the electron up instead of down.
    reload_error_probability: float = 0.0

    def __post_init__(self):
        if self.tunnel_out_rate <= 0 or self.tunnel_in_rate <= 0:
            raise ValueError("tunnel rates must be > 0")
        if self.detection_window <= 0:
            raise ValueError("detection window must be > 0")
        for p in (
            self.blip_miss_probability,
            self.dark_blip_probability,
            self.reload_error_probability,
        ):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")

    @property
    def detection_probability(self) -> float:
        """Probability that an up electron produces a blip in the window."""
        return (1.0 - self.blip_miss_probability) * (
            1.0 - math.exp(-self.tunnel_out_rate * self.detection_window)
        )


@dataclass(frozen=True)
class ShotRecord:
    blip: bool
    shot_index: int = 0
    electron_up_inferred: bool = False


@dataclass(frozen=True)
class NuclearReadResult:
    state_up: bool
    up_proportion: float
    n_shots: int

    def __post_init__(self):
        if not 0.0 <= self.up_proportion <= 1.0:
            raise ValueError("up_proportion must lie in [0, 1]")


def _collapse(state: QuantumState, rng: np.random.Generator) -> int:
    pops = state.populations()
    pops = np.clip(pops, 0.0, None)
    return int(rng.choice(4, p=pops / pops.sum()))


def electron_single_shot(
    state: QuantumState, params: ReadoutParams, rng: np.random.Generator
) -> tuple[ShotRecord, QuantumState]:
    """One spin-dependent tunneling shot; returns the record and post-state.

    An up electron tunnels out and blips with the detection probability,
    and the dot reloads a down electron either way; a down electron blips
    only through dark counts.  The nuclear projection is untouched.
    """
    level = _collapse(state, rng)
    if level in _ELECTRON_UP:
        blip = rng.random() < params.detection_probability
    else:
        blip = rng.random() < params.dark_blip_probability
    post = _RELOAD[level]
    if rng.random() < params.reload_error_probability:
        post = _FLIP_ELECTRON[post]
    return ShotRecord(blip=blip, electron_up_inferred=blip), QuantumState.basis_state(post)


def nuclear_read(
    state: QuantumState,
    n_shots: int,
    threshold: float,
    params: ReadoutParams,
    env: NoiseEnvironment | None = None,
    rng: np.random.Generator | None = None,
    cx_fidelity: float = 1.0,
) -> tuple[NuclearReadResult, QuantumState]:
    """QND nuclear readout by repeated conditional electron inversion.

    Each shot applies an adiabatic electron inversion resonant only in the
    nuclear-up manifold (a controlled-X on the electron, succeeding with
    ``cx_fidelity``) followed by one electron shot; the nuclear state is
    declared up when the blip proportion exceeds ``threshold``.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    rng = rng if rng is not None else np.random.default_rng()
    level = _collapse(state, rng)
    blips = 0
    for _ in range(n_shots):
        # Conditional inversion: resonant only for a down electron with an
        # up nucleus (the electron is down after every reload).
        if level == DOWN_UP and rng.random() < cx_fidelity:
            level = UP_UP
        if level in _ELECTRON_UP:
            blip = rng.random() < params.detection_probability
        else:
            blip = rng.random() < params.dark_blip_probability
        blips += blip
        level = _RELOAD[level]
        if rng.random() < params.reload_error_probability:
            level = _FLIP_ELECTRON[level]
    proportion = blips / n_shots
    result = NuclearReadResult(
        state_up=proportion > threshold, up_proportion=proportion, n_shots=n_shots
    )
    return result, QuantumState.basis_state(level)


def flip_probability(series) -> float:
    """Fraction of sign changes between consecutive entries: N_flip/(N-1)."""
    values = [bool(s) for s in series]
    if len(values) < 2:
        raise ValueError("series must contain at least 2 entries")
    flips = sum(a != b for a, b in zip(values, values[1:]))
    return flips / (len(values) - 1)


@dataclass(frozen=True)
class EndorConfig:
    """Component fidelities for the double-resonance initialization."""

    aesr2_fidelity: float = 0.99
    anmr1_fidelity: float = 0.99
    electron_init_error: float = 0.09

    def __post_init__(self):
        for p in (self.aesr2_fidelity, self.anmr1_fidelity, self.electron_init_error):
            if not 0.0 <= p <= 1.0:
                raise ValueError("fidelities and errors must lie in [0, 1]")


def endor_initialize(
    state: QuantumState,
    env: NoiseEnvironment | None = None,
    config: EndorConfig | None = None,
    rng: np.random.Generator | None = None,
) -> QuantumState:
    """Double-resonance initialization into |down, nuclear-up>.

    Sequence: electron initialization (down, up to the configured error),
    adiabatic electron inversion in the nuclear-up manifold, adiabatic
    nuclear inversion in the electron-down manifold, then an electron
    read/reload.  With ideal components both nuclear branches converge to
    the target state regardless of the input.
    """
    config = config or EndorConfig()
    rng = rng if rng is not None else np.random.default_rng()
    level = _collapse(state, rng)
    # Electron initialization before the sequence.
    level = _RELOAD[level]
    if rng.random() < config.electron_init_error:
        level = _FLIP_ELECTRON[level]
    # Adiabatic electron inversion, resonant in the nuclear-up manifold.
    if level in (DOWN_UP, UP_UP) and rng.random() < config.aesr2_fidelity:
        level = _FLIP_ELECTRON[level]
    # Adiabatic nuclear inversion, resonant in the electron-down manifold.
    if level in (DOWN_UP, DOWN_DOWN) and rng.random() < config.anmr1_fidelity:
        level = DOWN_DOWN if level == DOWN_UP else DOWN_UP
    # Final electron read/reload.
    level = _RELOAD[level]
    return QuantumState.basis_state(level)


def endor_fidelity(
    config: EndorConfig,
    n_trials: int,
    rng: np.random.Generator,
    env: NoiseEnvironment | None = None,
) -> float:
    """Monte-Carlo initialization fidelity from a maximally mixed state."""
    hits = 0
    mixed = QuantumState.mixed([0.25, 0.25, 0.25, 0.25])
    for _ in range(n_trials):
        final = endor_initialize(mixed, env, config, rng)
        hits += final.population(DOWN_UP) > 0.5
    return hits / n_trials


def sample_blips(
    p_electron_up: float, n_shots: int, params: ReadoutParams, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized blip draws for shots with a common electron-up probability.

    Fast path for experiment sweeps where each shot re-prepares the same
    state: marginalizes the projection and tunneling into one Bernoulli.
    """
    if not 0.0 <= p_electron_up <= 1.0:
        raise ValueError("p_electron_up must lie in [0, 1]")
    p_blip = (
        p_electron_up * params.detection_probability
        + (1.0 - p_electron_up) * params.dark_blip_probability
    )
    return rng.random(n_shots) < p_blip

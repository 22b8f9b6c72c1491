"""Time evolution of the donor state through pulse sequences.

The propagator works in the interaction picture with respect to the exact
static Hamiltonian (its eigenbasis is the state basis, see states.py).
For a constant tone under the rotating-wave approximation the evolution
factorizes into a single matrix exponential of a time-independent block
Hamiltonian, so tones are propagated exactly.  Chirps and non-RWA
evolution are integrated with piecewise-constant matrix-exponential steps
of at most ``dt_max``; the stepping loop is the compiled-kernel hot path.

Frames: the ``lab`` frame differs from the ``rotating`` (interaction)
frame by a diagonal phase transformation, applied analytically after
propagation.  Populations in the measurement basis are therefore
identical in both frames by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .constants import DonorParameters, PhysicalConstants
from .hamiltonian import (
    DOWN_DOWN,
    DOWN_UP,
    UP_DOWN,
    UP_UP,
    build_full_hamiltonian,
    eigensystem,
    electron_flip_operator,
    nuclear_flip_operator,
    spin_dot_spin,
)
from .noise import IDEAL_REALIZATION, NoiseEnvironment, NoiseRealization, sample_realization
from .pulses import Channel, Chirp, Delay, PulseSegment, PulseSequence, ReadMarker, Tone
from .states import QuantumState


class StepSizeError(RuntimeError):
    """dt_max is too coarse for the instantaneous frequencies of a segment."""


class CalibrationError(RuntimeError):
    """Iterative pulse calibration failed to converge."""


#: Level pairs (upper, lower) coupled by each drive channel.
CHANNEL_PAIRS = {
    Channel.ESR: ((UP_DOWN, DOWN_DOWN), (UP_UP, DOWN_UP)),   # esr1, esr2
    Channel.NMR: ((DOWN_DOWN, DOWN_UP), (UP_UP, UP_DOWN)),   # nmr1, nmr2
    Channel.EDSR: ((UP_DOWN, DOWN_UP),),                     # flip-flop
}


@dataclass(frozen=True)
class EvolutionConfig:
    frame: str = "rotating"          # "rotating" or "lab"
    rwa: bool = True
    dt_max_us: float | None = None   # None: automatic per-segment choice
    #: Automatic step: dt = 1 / (steps_per_cycle * highest instantaneous frequency).
    steps_per_cycle: int = 50
    #: Rabi frequency per volt of gate amplitude for the magnetic channels.
    esr_rabi_mhz_per_v: float = 0.1
    nmr_rabi_mhz_per_v: float = 0.1
    #: Delays at least this long are handled by the relaxation rate equations
    #: (coherences do not survive them); shorter delays evolve coherently.
    relaxation_threshold_us: float = 1e4

    def __post_init__(self):
        if self.frame not in ("rotating", "lab"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.dt_max_us is not None and self.dt_max_us <= 0:
            raise ValueError("dt_max_us must be > 0")


class SpinSystem:
    """Cached eigen-decomposition and drive operators for one donor."""

    def __init__(
        self,
        params: DonorParameters,
        constants: PhysicalConstants | None = None,
    ):
        self.params = params
        self.constants = constants or PhysicalConstants()
        h = build_full_hamiltonian(params, self.constants)
        self.energies_mhz, self.eigvecs = eigensystem(h)
        v = self.eigvecs
        self._ops = {
            Channel.ESR: np.conj(v.T) @ electron_flip_operator() @ v,
            Channel.NMR: np.conj(v.T) @ nuclear_flip_operator() @ v,
            Channel.EDSR: np.conj(v.T) @ spin_dot_spin() @ v,
        }

    def coupling_operator(self, channel: Channel) -> np.ndarray:
        return self._ops[channel]

    def gap_mhz(self, upper: int, lower: int) -> float:
        return float(self.energies_mhz[upper] - self.energies_mhz[lower])

    def ff_gap_mhz(self) -> float:
        return self.gap_mhz(UP_DOWN, DOWN_UP)

    def transition_gap_mhz(self, name: str) -> float:
        gaps = {
            "esr1": (UP_DOWN, DOWN_DOWN),
            "esr2": (UP_UP, DOWN_UP),
            "nmr1": (DOWN_DOWN, DOWN_UP),
            "nmr2": (UP_UP, UP_DOWN),
            "ff": (UP_DOWN, DOWN_UP),
        }
        return self.gap_mhz(*gaps[name])

    def drive_strength_mhz(
        self, channel: Channel, amplitude_v: float, config: EvolutionConfig
    ) -> float:
        """Generalized drive field kappa in MHz (see rabi_frequency_mhz)."""
        if channel is Channel.EDSR:
            return self.params.stark_slope_khz_per_v * 1e-3 * amplitude_v
        if channel is Channel.ESR:
            return config.esr_rabi_mhz_per_v * amplitude_v
        return config.nmr_rabi_mhz_per_v * amplitude_v

    def rabi_frequency_mhz(
        self,
        channel: Channel,
        amplitude_v: float,
        config: EvolutionConfig,
        pair: tuple[int, int] | None = None,
    ) -> float:
        """On-resonance Rabi frequency kappa * |<i|O|j>| for a channel pair."""
        if pair is None:
            pair = CHANNEL_PAIRS[channel][0]
        kappa = self.drive_strength_mhz(channel, amplitude_v, config)
        elem = abs(self.coupling_operator(channel)[pair[0], pair[1]])
        return kappa * elem


def _resolve_system(system) -> SpinSystem:
    if isinstance(system, SpinSystem):
        return system
    return SpinSystem(system)


def _auto_dt(config: EvolutionConfig, f_max_mhz: float, duration_us: float) -> float:
    """Step size for a segment; raises if an explicit dt_max is too coarse."""
    if f_max_mhz <= 0:
        return duration_us
    dt = 1.0 / (config.steps_per_cycle * f_max_mhz)
    if config.dt_max_us is not None:
        if config.dt_max_us > 0.5 / f_max_mhz:
            raise StepSizeError(
                f"dt_max={config.dt_max_us} us exceeds half the shortest period "
                f"{1.0 / f_max_mhz:.3g} us of this segment"
            )
        dt = min(dt, config.dt_max_us)
    return dt


def _lab_frame_phases(system: SpinSystem, shifts_mhz: np.ndarray, duration_us: float) -> np.ndarray:
    """Diagonal back-transform from the interaction picture to the lab frame."""
    return np.exp(-2j * np.pi * (system.energies_mhz + shifts_mhz) * duration_us)


def _rwa_generator(
    system: SpinSystem,
    seg,
    freq_mhz: float,
    shifts: np.ndarray,
    config: EvolutionConfig,
    pairs=None,
) -> np.ndarray:
    """Rotating-frame Hamiltonian H_R for drive frequency ``freq_mhz``."""
    pairs = pairs if pairs is not None else CHANNEL_PAIRS[seg.channel]
    op = system.coupling_operator(seg.channel)
    kappa = system.drive_strength_mhz(seg.channel, seg.amplitude_v, config)
    h = np.diag(shifts).astype(complex)
    phase = np.exp(-1j * seg.phase_rad)
    for (i, j) in pairs:
        delta = freq_mhz - system.gap_mhz(i, j)
        h[i, i] -= delta / 2.0
        h[j, j] += delta / 2.0
        h[i, j] += 0.5 * kappa * op[i, j] * phase
        h[j, i] += np.conj(0.5 * kappa * op[i, j] * phase)
    return h


def _rotating_boundary(system: SpinSystem, seg, slow_phase_cycles: dict) -> np.ndarray:
    """Diagonal T(t) of the per-pair rotating transformation (see module doc)."""
    t = np.ones(4, dtype=complex)
    for (i, j), phi in slow_phase_cycles.items():
        t[i] = np.exp(+1j * np.pi * phi)
        t[j] = np.exp(-1j * np.pi * phi)
    return t


def _propagate_rwa_drive(
    state: QuantumState,
    seg,
    system: SpinSystem,
    shifts: np.ndarray,
    config: EvolutionConfig,
) -> QuantumState:
    """Tone (exact) or chirp (stepped) propagation under the RWA."""
    tau = seg.duration_us
    pairs = CHANNEL_PAIRS[seg.channel]
    kappa = system.drive_strength_mhz(seg.channel, seg.amplitude_v, config)

    if isinstance(seg, Tone):
        h = _rwa_generator(system, seg, seg.frequency_mhz, shifts, config)
        deltas = {p: seg.frequency_mhz - system.gap_mhz(*p) for p in pairs}
        f_max = max([abs(d) for d in deltas.values()] + [kappa, np.abs(shifts).max(initial=0.0)])
        if config.dt_max_us is not None and f_max > 0 and config.dt_max_us > 0.5 / f_max:
            raise StepSizeError(
                f"dt_max={config.dt_max_us} us too coarse for detuning/drive of {f_max:.3g} MHz"
            )
        u_rot = _expm_prop(h, tau)
        # Slow phase accumulated by the rotating transformation over tau.
        t_end = _rotating_boundary(system, seg, {p: 2.0 * d * tau / 2.0 for p, d in deltas.items()})
        u = np.conj(t_end)[:, None] * u_rot
        return _finish(state, u, system, shifts, tau, config)

    # Chirp: piecewise-constant steps in the detuning.  Pairs whose gap
    # stays far outside the sweep window are spectators: their transfer is
    # O((kappa/delta)^2) and they are left untouched in the interaction
    # picture, which keeps the step size set by the swept transition alone.
    rate = seg.rate_mhz_per_us
    f_lo = min(seg.f_start_mhz, seg.f_end_mhz)
    f_hi = max(seg.f_start_mhz, seg.f_end_mhz)
    margin = max(100.0 * kappa, 2.0)
    pairs = tuple(
        p for p in pairs
        if f_lo - margin <= system.gap_mhz(*p) <= f_hi + margin
    )
    delta_ends = []
    for p in pairs:
        gap = system.gap_mhz(*p)
        delta_ends += [abs(seg.f_start_mhz - gap), abs(seg.f_end_mhz - gap)]
    f_max = max(delta_ends + [kappa, np.abs(shifts).max(initial=0.0)])
    dt = _auto_dt(config, f_max, tau)
    n = max(1, int(math.ceil(tau / dt)))
    dt = tau / n
    t_mid = (np.arange(n) + 0.5) * dt
    f_mid = seg.f_start_mhz + rate * t_mid
    # Only the pair-diagonal detuning terms vary along the sweep.
    h_const = _rwa_generator(system, seg, 0.0, shifts, config, pairs)
    for (i, j) in pairs:
        gap = system.gap_mhz(i, j)
        h_const[i, i] += (0.0 - gap) / 2.0
        h_const[j, j] -= (0.0 - gap) / 2.0
    h_stack = np.repeat(h_const[None, :, :], n, axis=0)
    for (i, j) in pairs:
        delta = f_mid - system.gap_mhz(i, j)
        h_stack[:, i, i] -= delta / 2.0
        h_stack[:, j, j] += delta / 2.0
    if state.is_pure:
        out = _kernels.propagate_vector(state.vector, h_stack, np.full(n, dt))
    else:
        out = _kernels.propagate_density(state.matrix, h_stack, np.full(n, dt))
    # Boundary phases of the rotating transformation: Phi(tau) in cycles is
    # the integrated slow phase f0*tau + rate*tau^2/2 - gap*tau per pair.
    phi = {
        p: 2.0 * (seg.f_start_mhz * tau + 0.5 * rate * tau**2 - system.gap_mhz(*p) * tau) / 2.0
        for p in pairs
    }
    t_end = _rotating_boundary(system, seg, phi)
    u_corr = np.conj(t_end)
    if state.is_pure:
        out = u_corr * out
    else:
        out = u_corr[:, None] * out * np.conj(u_corr)[None, :]
    return QuantumState(out)


def _propagate_full(
    state: QuantumState,
    seg,
    system: SpinSystem,
    shifts: np.ndarray,
    config: EvolutionConfig,
) -> QuantumState:
    """Drive propagation keeping the counter-rotating terms (no RWA)."""
    tau = seg.duration_us
    op = system.coupling_operator(seg.channel)
    kappa = system.drive_strength_mhz(seg.channel, seg.amplitude_v, config)
    if isinstance(seg, Tone):
        f_drive_max = abs(seg.frequency_mhz)
    else:
        f_drive_max = max(abs(seg.f_start_mhz), abs(seg.f_end_mhz))
    gaps = system.energies_mhz[:, None] - system.energies_mhz[None, :]
    f_max = f_drive_max + np.abs(gaps).max() + kappa
    dt = _auto_dt(config, f_max, tau)
    n = max(1, int(math.ceil(tau / dt)))
    dt = tau / n
    base = np.diag(shifts).astype(complex)
    out = state.vector if state.is_pure else state.matrix
    # Build the step stack in chunks to bound memory for long integrations.
    chunk = 1 << 16
    for start in range(0, n, chunk):
        t_mid = (np.arange(start, min(start + chunk, n)) + 0.5) * dt
        # Drive phase theta(t) = 2*pi * integral of f(t).
        if isinstance(seg, Tone):
            theta = 2.0 * np.pi * seg.frequency_mhz * t_mid
        else:
            theta = 2.0 * np.pi * (
                seg.f_start_mhz * t_mid + 0.5 * seg.rate_mhz_per_us * t_mid**2
            )
        envelope = kappa * np.cos(theta + seg.phase_rad)
        rot = np.exp(2j * np.pi * gaps[None, :, :] * t_mid[:, None, None])
        h_stack = base[None, :, :] + envelope[:, None, None] * (op[None, :, :] * rot)
        dts = np.full(len(t_mid), dt)
        if state.is_pure:
            out = _kernels.propagate_vector(out, h_stack, dts)
        else:
            out = _kernels.propagate_density(out, h_stack, dts)
    return QuantumState(out)


def _expm_prop(h: np.ndarray, tau_us: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-2j * np.pi * vals * tau_us)) @ np.conj(vecs.T)


def _finish(
    state: QuantumState,
    u: np.ndarray,
    system: SpinSystem,
    shifts: np.ndarray,
    tau: float,
    config: EvolutionConfig,
) -> QuantumState:
    return state.apply_unitary(u)


def propagate(
    state: QuantumState,
    segment: PulseSegment,
    system: SpinSystem | DonorParameters,
    realization: NoiseRealization | None = None,
    config: EvolutionConfig | None = None,
    start_time_us: float = 0.0,
) -> QuantumState:
    """Evolve ``state`` through one pulse segment.

    The noise realization is frozen: its per-level shifts enter the
    Hamiltonian as static detunings for the whole segment.  In the lab
    frame ``start_time_us`` (absolute time at which the segment begins)
    fixes the diagonal phase bookkeeping; populations are identical in
    both frames.  ReadMarker segments are measurement events and are
    rejected here; they are handled by run_sequence.
    """
    system = _resolve_system(system)
    config = config or EvolutionConfig()
    realization = realization or IDEAL_REALIZATION
    shifts = realization.level_shifts_mhz

    if isinstance(segment, ReadMarker):
        raise ValueError("ReadMarker segments are handled by run_sequence")
    if config.frame == "lab":
        # Undo the lab-frame phases accumulated up to the segment start.
        d0 = np.conj(_lab_frame_phases(system, shifts, start_time_us))
        state = state.apply_unitary(np.diag(d0))
    if isinstance(segment, Delay):
        h = np.diag(shifts).astype(complex)
        out = _finish(state, _expm_prop(h, segment.duration_us), system, shifts,
                      segment.duration_us, config)
    elif config.rwa:
        out = _propagate_rwa_drive(state, segment, system, shifts, config)
    else:
        out = _propagate_full(state, segment, system, shifts, config)
    if config.frame == "lab":
        d1 = _lab_frame_phases(system, shifts, start_time_us + segment.duration_us)
        out = out.apply_unitary(np.diag(d1))
    return out


def run_sequence(
    state: QuantumState,
    sequence: PulseSequence,
    system: SpinSystem | DonorParameters,
    env: NoiseEnvironment | None = None,
    config: EvolutionConfig | None = None,
    rng: np.random.Generator | None = None,
    readout_params=None,
    realization: NoiseRealization | None = None,
):
    """Run a full pulse sequence, returning (final state, shot log).

    The noise realization is sampled once per call (quasi-static
    contract).  Delays at least ``config.relaxation_threshold_us`` long are
    evolved with the relaxation rate equations; ReadMarker segments invoke
    single-shot electron readout and append a ShotRecord to the log.
    """
    from .noise import apply_relaxation
    from .readout import ReadoutParams, electron_single_shot

    system = _resolve_system(system)
    config = config or EvolutionConfig()
    env = env or NoiseEnvironment.quiet()
    rng = rng if rng is not None else np.random.default_rng()
    readout_params = readout_params or ReadoutParams()
    if realization is None:
        realization = sample_realization(env, rng)

    shots = []
    elapsed_us = 0.0
    for segment in sequence:
        if isinstance(segment, ReadMarker):
            record, state = electron_single_shot(state, readout_params, rng)
            record = replace(record, shot_index=len(shots))
            shots.append(record)
        elif (
            isinstance(segment, Delay)
            and segment.duration_us >= config.relaxation_threshold_us
        ):
            state = apply_relaxation(state, segment.duration_us * 1e-6, env.relaxation, rng)
            elapsed_us += segment.duration_us
        else:
            state = propagate(
                state, segment, system, realization, config, start_time_us=elapsed_us
            )
            elapsed_us += segment.duration_us
    return state, shots


def _chirp_target_pair(chirp: Chirp, system: SpinSystem) -> tuple[int, int]:
    """Channel pair whose gap is closest to the sweep window center."""
    center = 0.5 * (chirp.f_start_mhz + chirp.f_end_mhz)
    return min(
        CHANNEL_PAIRS[chirp.channel],
        key=lambda p: abs(system.gap_mhz(*p) - center),
    )


def adiabatic_inversion_probability(
    chirp: Chirp,
    system: SpinSystem | DonorParameters,
    env: NoiseEnvironment | None = None,
    config: EvolutionConfig | None = None,
    realization: NoiseRealization | None = None,
) -> float:
    """Population transferred across the chirp's target transition.

    Starts from the lower level of the channel pair nearest the sweep
    window and propagates through the chirp.
    """
    system = _resolve_system(system)
    config = config or EvolutionConfig()
    upper, lower = _chirp_target_pair(chirp, system)
    final = propagate(QuantumState.basis_state(lower), chirp, system, realization, config)
    return final.population(upper)


def calibrate_half_adiabatic(
    template: Chirp,
    system: SpinSystem | DonorParameters,
    config: EvolutionConfig | None = None,
    target: float = 0.5,
    tolerance: float = 0.01,
    max_iterations: int = 60,
) -> Chirp:
    """Find a chirp duration whose inversion probability matches ``target``.

    Bisects on the sweep duration (i.e. on the sweep rate, holding the
    frequency span of ``template`` fixed): slower sweeps are more adiabatic
    and invert more.  Raises CalibrationError if no bracket is found or the
    bisection fails to converge.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in the open interval (0, 1)")
    system = _resolve_system(system)
    config = config or EvolutionConfig()

    def prob(duration_us: float) -> float:
        c = replace(template, duration_us=duration_us)
        return adiabatic_inversion_probability(c, system, config=config)

    lo = hi = template.duration_us
    p = prob(lo)
    it = 0
    while p > target and it < max_iterations:   # too adiabatic: sweep faster
        lo /= 2.0
        p = prob(lo)
        it += 1
    p = prob(hi)
    while p < target and it < max_iterations:   # too fast: sweep slower
        hi *= 2.0
        p = prob(hi)
        it += 1
    if it >= max_iterations:
        raise CalibrationError("could not bracket the target inversion probability")

    for _ in range(max_iterations):
        mid = math.sqrt(lo * hi)
        p = prob(mid)
        if abs(p - target) <= tolerance:
            return replace(template, duration_us=mid)
        if p > target:
            hi = mid
        else:
            lo = mid
    raise CalibrationError(
        f"bisection did not reach target {target} +/- {tolerance} "
        f"in {max_iterations} iterations"
    )

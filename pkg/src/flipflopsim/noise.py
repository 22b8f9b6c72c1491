"""Noise environment: relaxation, dephasing, the 29Si bath and PIRS models.

The environment description is immutable.  Each shot freezes the slow
degrees of freedom into a NoiseRealization (quasi-static contract): a
Gaussian detuning draw, the instantaneous telegraph/29Si configurations
and the drive-induced resonance shifts.  Realizations expose the result
as per-level energy shifts consumed by the propagator:

* electron-Zeeman-like shifts (29Si bath, ESR-type pulse-induced shift,
  quasi-static Gaussian, telegraph components) move both ESR frequencies
  and the flip-flop frequency by the same amount and leave NMR untouched;
* flip-flop-specific shifts (EDSR-type pulse-induced shift) move only the
  flip-flop transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .hamiltonian import DOWN_DOWN, DOWN_UP, UP_DOWN, UP_UP
from .states import QuantumState

# Paper-derived defaults.
T1E_S = 6.45
T1FF_S = 173.0
SI29_COUPLINGS_KHZ = (260.0, 85.0, 85.0)
PIRS_ESR_SLOPE_KHZ_PER_V = 50.5
PIRS_ESR_SLOPE_HZ_PER_US = 219.0


@dataclass(frozen=True)
class RelaxationRates:
    """Relaxation times in seconds; t1n may be infinite."""

    t1e_s: float = T1E_S
    t1ff_s: float = T1FF_S
    t1n_s: float = math.inf

    def __post_init__(self):
        if self.t1e_s <= 0 or self.t1ff_s <= 0 or self.t1n_s <= 0:
            raise ValueError("relaxation times must be positive")


def combined_t1(rates: RelaxationRates) -> float:
    """Total electron decay time out of |↑⇓>: 1/T1 = 1/T1e + 1/T1ff."""
    return 1.0 / (1.0 / rates.t1e_s + 1.0 / rates.t1ff_s)


@dataclass(frozen=True)
class TelegraphComponent:
    amplitude_khz: float
    switching_rate_per_s: float

    def __post_init__(self):
        if self.switching_rate_per_s <= 0:
            raise ValueError("switching rate must be positive")


@dataclass(frozen=True)
class DephasingModel:
    """Quasi-static Gaussian detuning plus optional telegraph components.

    All components act as electron-Zeeman-like shifts.  The model is
    phenomenological: components are tuned to reproduce measured decay
    constants, not derived from a microscopic noise theory.
    """

    quasi_static_sigma_khz: float = 0.0
    telegraph: tuple = ()

    def __post_init__(self):
        if self.quasi_static_sigma_khz < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class Si29Bath:
    """Hyperfine-coupled residual 29Si nuclei as symmetric telegraph spins."""

    couplings_khz: tuple = ()
    flip_rate_per_s: float = 0.0
    initial_config: tuple = ()

    def __post_init__(self):
        if any(c < 0 for c in self.couplings_khz):
            raise ValueError("couplings must be >= 0")
        if self.initial_config and len(self.initial_config) != len(self.couplings_khz):
            raise ValueError("config length must match couplings length")

    def config_or_default(self) -> tuple:
        if self.initial_config:
            return self.initial_config
        return tuple(1 for _ in self.couplings_khz)


def si29_offset(config, couplings_khz) -> float:
    """Resonance offset sum(±A_i/2) in kHz for a bath spin configuration."""
    config = tuple(config)
    couplings = tuple(couplings_khz)
    if len(config) != len(couplings):
        raise ValueError("config and couplings lengths differ")
    return sum(s * a / 2.0 for s, a in zip(config, couplings))


@dataclass(frozen=True)
class PirsEdsrRow:
    """Saturating-exponential fit row for the EDSR resonance shift."""

    amplitude_v: float
    delta_f_a_khz: float
    tau_sat_us: float
    delta_f_0_khz: float

    def __post_init__(self):
        if self.tau_sat_us <= 0:
            raise ValueError("tau_sat must be positive")


#: Fit rows for the EDSR pulse-induced shift at the two measured amplitudes.
PIRS_EDSR_ROWS = (
    PirsEdsrRow(amplitude_v=1.84, delta_f_a_khz=94.8, tau_sat_us=284.0, delta_f_0_khz=2.1),
    PirsEdsrRow(amplitude_v=0.97, delta_f_a_khz=20.4, tau_sat_us=93.0, delta_f_0_khz=-4.7),
)


@dataclass(frozen=True)
class PirsModel:
    """Empirical pulse-induced resonance shift models.

    The ESR shift is linear in drive amplitude and in drive duration; the
    two slopes are measured separately and applied additively here (the
    combination rule is a documented assumption, not a derivation).  The
    EDSR shift follows a saturating exponential per amplitude row.
    """

    esr_slope_khz_per_v: float = PIRS_ESR_SLOPE_KHZ_PER_V
    esr_slope_hz_per_us: float = PIRS_ESR_SLOPE_HZ_PER_US
    edsr_rows: tuple = PIRS_EDSR_ROWS
    interpolate_amplitude: bool = False


def pirs_esr_shift(amplitude_v: float, duration_us: float, model: PirsModel) -> float:
    """ESR resonance shift in kHz from drive amplitude and duration."""
    return (
        model.esr_slope_khz_per_v * amplitude_v
        + model.esr_slope_hz_per_us * 1e-3 * duration_us
    )


def pirs_edsr_shift(amplitude_v: float, duration_us: float, model: PirsModel) -> float:
    """EDSR resonance shift in kHz: saturating exponential in duration."""
    rows = sorted(model.edsr_rows, key=lambda r: r.amplitude_v)
    exact = [r for r in rows if math.isclose(r.amplitude_v, amplitude_v, rel_tol=1e-9)]
    if exact:
        row = exact[0]
        return row.delta_f_0_khz + row.delta_f_a_khz * (
            1.0 - math.exp(-duration_us / row.tau_sat_us)
        )
    if not model.interpolate_amplitude:
        amps = [r.amplitude_v for r in rows]
        raise ValueError(
            f"amplitude {amplitude_v} V not in fitted rows {amps}; "
            "enable interpolate_amplitude to interpolate"
        )
    if amplitude_v <= rows[0].amplitude_v:
        lo = hi = rows[0]
        w = 0.0
    elif amplitude_v >= rows[-1].amplitude_v:
        lo = hi = rows[-1]
        w = 0.0
    else:
        lo, hi = rows[0], rows[-1]
        w = (amplitude_v - lo.amplitude_v) / (hi.amplitude_v - lo.amplitude_v)

    def lerp(a, b):
        return a + w * (b - a)

    # Interpolate linearly in delta_f_A, delta_f_0 and the saturation rate.
    dfa = lerp(lo.delta_f_a_khz, hi.delta_f_a_khz)
    df0 = lerp(lo.delta_f_0_khz, hi.delta_f_0_khz)
    inv_tau = lerp(1.0 / lo.tau_sat_us, 1.0 / hi.tau_sat_us)
    return df0 + dfa * (1.0 - math.exp(-duration_us * inv_tau))


@dataclass(frozen=True)
class PirsDriveContext:
    """Drive amplitude/duration assumed for the frozen PIRS state of a shot."""

    amplitude_v: float
    duration_us: float


@dataclass(frozen=True)
class NoiseEnvironment:
    relaxation: RelaxationRates = field(default_factory=RelaxationRates)
    dephasing: DephasingModel = field(default_factory=DephasingModel)
    si29: Si29Bath = field(default_factory=Si29Bath)
    pirs: PirsModel | None = None
    pirs_context: PirsDriveContext | None = None
    #: Wall-clock time between consecutive realization samples; sets how far
    #: the telegraph processes advance from one shot to the next.
    shot_interval_s: float = 1.0

    @classmethod
    def quiet(cls) -> "NoiseEnvironment":
        """No dephasing, no bath, effectively infinite relaxation times."""
        return cls(
            relaxation=RelaxationRates(t1e_s=1e12, t1ff_s=1e12),
            dephasing=DephasingModel(),
            si29=Si29Bath(),
        )

    def to_dict(self) -> dict:
        """Snapshot embedded in result metadata for reproducibility."""
        return {
            "relaxation": {
                "t1e_s": self.relaxation.t1e_s,
                "t1ff_s": self.relaxation.t1ff_s,
                "t1n_s": self.relaxation.t1n_s,
            },
            "dephasing": {
                "quasi_static_sigma_khz": self.dephasing.quasi_static_sigma_khz,
                "telegraph": [
                    {"amplitude_khz": t.amplitude_khz, "switching_rate_per_s": t.switching_rate_per_s}
                    for t in self.dephasing.telegraph
                ],
            },
            "si29": {
                "couplings_khz": list(self.si29.couplings_khz),
                "flip_rate_per_s": self.si29.flip_rate_per_s,
            },
            "pirs": None
            if self.pirs is None
            else {
                "esr_slope_khz_per_v": self.pirs.esr_slope_khz_per_v,
                "esr_slope_hz_per_us": self.pirs.esr_slope_hz_per_us,
            },
            "shot_interval_s": self.shot_interval_s,
        }


@dataclass(frozen=True)
class NoiseRealization:
    """Frozen per-shot noise state.  Immutable after sampling."""

    electron_zeeman_shift_khz: float = 0.0
    ff_shift_khz: float = 0.0
    si29_config: tuple = ()
    telegraph_config: tuple = ()

    @property
    def level_shifts_mhz(self) -> np.ndarray:
        """Per-level energy shifts (MHz) in basis (↑⇑, ↑⇓, ↓⇑, ↓⇓)."""
        de = self.electron_zeeman_shift_khz * 1e-3
        dff = self.ff_shift_khz * 1e-3
        return np.array(
            [de / 2.0, de / 2.0 + dff / 2.0, -de / 2.0 - dff / 2.0, -de / 2.0]
        )

    def offset_khz(self, transition: str) -> float:
        """Frequency offset of a named transition (esr1/esr2/ff/nmr1/nmr2)."""
        if transition in ("esr1", "esr2"):
            return self.electron_zeeman_shift_khz
        if transition == "ff":
            return self.electron_zeeman_shift_khz + self.ff_shift_khz
        if transition in ("nmr1", "nmr2"):
            return 0.0
        raise ValueError(f"unknown transition {transition!r}")


IDEAL_REALIZATION = NoiseRealization()


def _evolve_telegraph(config, rates_per_s, dt_s, rng) -> tuple:
    """Advance independent symmetric telegraph signs by dt."""
    out = []
    for sign, rate in zip(config, rates_per_s):
        p_flip = 0.5 * (1.0 - math.exp(-2.0 * rate * dt_s))
        out.append(-sign if rng.random() < p_flip else sign)
    return tuple(out)


def sample_realization(
    env: NoiseEnvironment,
    rng: np.random.Generator,
    prev: NoiseRealization | None = None,
) -> NoiseRealization:
    """Draw a frozen noise realization for one shot.

    The 29Si and telegraph configurations continue from ``prev`` (advanced
    by the environment's shot interval); the Gaussian detuning is redrawn
    independently each shot.
    """
    n_si = len(env.si29.couplings_khz)
    if prev is not None and len(prev.si29_config) == n_si:
        si_config = _evolve_telegraph(
            prev.si29_config, [env.si29.flip_rate_per_s] * n_si, env.shot_interval_s, rng
        )
    else:
        si_config = env.si29.config_or_default()

    tele = env.dephasing.telegraph
    if prev is not None and len(prev.telegraph_config) == len(tele):
        tele_config = _evolve_telegraph(
            prev.telegraph_config,
            [t.switching_rate_per_s for t in tele],
            env.shot_interval_s,
            rng,
        )
    else:
        tele_config = tuple(rng.choice([-1, 1]) for _ in tele)

    de = 0.0
    if n_si:
        de += si29_offset(si_config, env.si29.couplings_khz)
    if env.dephasing.quasi_static_sigma_khz > 0:
        de += rng.normal(0.0, env.dephasing.quasi_static_sigma_khz)
    de += sum(s * t.amplitude_khz for s, t in zip(tele_config, tele))

    dff = 0.0
    if env.pirs is not None and env.pirs_context is not None:
        ctx = env.pirs_context
        de += pirs_esr_shift(ctx.amplitude_v, ctx.duration_us, env.pirs)
        dff += pirs_edsr_shift(ctx.amplitude_v, ctx.duration_us, env.pirs)

    return NoiseRealization(
        electron_zeeman_shift_khz=de,
        ff_shift_khz=dff,
        si29_config=si_config,
        telegraph_config=tele_config,
    )


# -- relaxation ------------------------------------------------------------

def _jump_table(rates: RelaxationRates):
    """Outgoing (rate 1/s, target) jumps per basis level."""
    ge = 1.0 / rates.t1e_s
    gff = 1.0 / rates.t1ff_s
    gn = 0.0 if math.isinf(rates.t1n_s) else 1.0 / rates.t1n_s
    return {
        UP_UP: [(ge, DOWN_UP)],
        UP_DOWN: [(ge, DOWN_DOWN), (gff, DOWN_UP)],
        DOWN_DOWN: [(gn, DOWN_UP)] if gn > 0 else [],
        DOWN_UP: [],
    }


def rate_generator(rates: RelaxationRates) -> np.ndarray:
    """Master-equation generator Q (1/s): d p / dt = p @ Q."""
    q = np.zeros((4, 4))
    for src, jumps in _jump_table(rates).items():
        for rate, dst in jumps:
            q[src, dst] += rate
            q[src, src] -= rate
    return q


def relaxation_transition_matrix(rates: RelaxationRates, dt_s: float) -> np.ndarray:
    """Exact Markov transition matrix P[i, j] = P(i -> j in dt)."""
    return expm(rate_generator(rates) * dt_s)


def apply_relaxation(
    state: QuantumState, dt_s: float, rates: RelaxationRates, rng: np.random.Generator
) -> QuantumState:
    """Stochastic relaxation jumps over a seconds-scale interval.

    Coherences do not survive these intervals (T2 is orders of magnitude
    shorter), so the state is first collapsed to a basis level sampled from
    its populations, then evolved with Gillespie jumps.  Over many
    trajectories the populations follow the rate equations exactly.
    """
    if dt_s < 0:
        raise ValueError("dt must be >= 0")
    if dt_s == 0:
        return state
    pops = state.populations()
    level = int(rng.choice(4, p=pops / pops.sum()))
    table = _jump_table(rates)
    t = 0.0
    while True:
        jumps = table[level]
        total = sum(rate for rate, _ in jumps)
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t >= dt_s:
            break
        u = rng.random() * total
        acc = 0.0
        for rate, dst in jumps:
            acc += rate
            if u < acc:
                level = dst
                break
    return QuantumState.basis_state(level)

"""Builders for the standard experiment pulse sequences.

Each builder maps a named protocol onto concrete segments using the
system's transition gaps and drive calibrations, so callers only supply
the physically meaningful knobs (free-evolution time, pump period, ...).
"""

from __future__ import annotations

from .engine import EvolutionConfig, SpinSystem, _resolve_system
from .pulses import Channel, Chirp, Delay, PulseSequence, ReadMarker, Tone

#: Default adiabatic sweep: 2 MHz span over 200 us.  With the default drive
#: calibrations this gives a Landau-Zener exponent of ~10 (inversion
#: probability > 0.9999) while staying insensitive to frequency offsets of
#: a few hundred kHz.
ADIABATIC_SPAN_MHZ = 2.0
ADIABATIC_DURATION_US = 200.0
ADIABATIC_AMPLITUDE_V = 1.0

SEQUENCE_KINDS = (
    "ENDOR-init",
    "nuclear-read",
    "EDSR-rabi",
    "ramsey",
    "hahn-echo",
    "t1ff-pump",
    "spectrum-scan",
)


def adiabatic_chirp(
    system: SpinSystem,
    transition: str,
    span_mhz: float = ADIABATIC_SPAN_MHZ,
    duration_us: float = ADIABATIC_DURATION_US,
    amplitude_v: float = ADIABATIC_AMPLITUDE_V,
) -> Chirp:
    """Adiabatic inversion chirp centered on a named transition."""
    channel = {
        "esr1": Channel.ESR, "esr2": Channel.ESR,
        "nmr1": Channel.NMR, "nmr2": Channel.NMR,
        "ff": Channel.EDSR,
    }[transition]
    center = system.transition_gap_mhz(transition)
    return Chirp(
        f_start_mhz=center - span_mhz / 2,
        f_end_mhz=center + span_mhz / 2,
        amplitude_v=amplitude_v,
        duration_us=duration_us,
        channel=channel,
    )


def _require(params: dict, key: str, kind: str):
    if key not in params:
        raise ValueError(f"kind {kind!r} requires parameter {key!r}")
    return params[key]


def _ff_pulse(system, config, amplitude_v, fraction_of_pi, phase_rad=0.0) -> Tone:
    """Resonant qubit-transition tone rotating by fraction_of_pi * pi."""
    f_rabi = system.rabi_frequency_mhz(Channel.EDSR, amplitude_v, config)
    return Tone(
        frequency_mhz=system.ff_gap_mhz(),
        amplitude_v=amplitude_v,
        duration_us=fraction_of_pi / (2.0 * f_rabi),
        channel=Channel.EDSR,
        phase_rad=phase_rad,
    )


def build_standard_sequence(
    kind: str,
    system,
    config: EvolutionConfig | None = None,
    **params,
) -> PulseSequence:
    """Build one of the named standard sequences (see SEQUENCE_KINDS)."""
    system = _resolve_system(system)
    config = config or EvolutionConfig()
    if kind == "ENDOR-init":
        return PulseSequence(
            segments=[
                adiabatic_chirp(system, "esr2"),
                adiabatic_chirp(system, "nmr1"),
                ReadMarker(),
            ],
            label="ENDOR-init",
        )
    if kind == "nuclear-read":
        n_shots = int(params.get("n_shots", 20))
        segments = []
        for _ in range(n_shots):
            segments += [adiabatic_chirp(system, "esr2"), ReadMarker()]
        return PulseSequence(segments=segments, label="nuclear-read")
    if kind == "EDSR-rabi":
        duration_us = float(_require(params, "duration_us", kind))
        amplitude_v = float(params.get("amplitude_v", 0.4))
        return PulseSequence(
            segments=[
                Tone(
                    frequency_mhz=float(params.get("frequency_mhz", system.ff_gap_mhz())),
                    amplitude_v=amplitude_v,
                    duration_us=duration_us,
                    channel=Channel.EDSR,
                ),
                ReadMarker(),
            ],
            label="EDSR-rabi",
        )
    if kind == "ramsey":
        tau_us = float(_require(params, "tau_us", kind))
        amplitude_v = float(params.get("amplitude_v", 0.4))
        half_pi = _ff_pulse(system, config, amplitude_v, 0.5)
        return PulseSequence(
            segments=[half_pi, Delay(tau_us), half_pi, ReadMarker()],
            label="ramsey",
        )
    if kind == "hahn-echo":
        tau_us = float(_require(params, "tau_us", kind))
        amplitude_v = float(params.get("amplitude_v", 0.4))
        half_pi = _ff_pulse(system, config, amplitude_v, 0.5)
        pi = _ff_pulse(system, config, amplitude_v, 1.0)
        return PulseSequence(
            segments=[half_pi, Delay(tau_us / 2), pi, Delay(tau_us / 2), half_pi, ReadMarker()],
            label="hahn-echo",
        )
    if kind == "t1ff-pump":
        wait_s = float(_require(params, "wait_s", kind))
        period_s = float(_require(params, "period_s", kind))
        if period_s <= 0 or wait_s < period_s:
            raise ValueError("t1ff-pump needs wait_s >= period_s > 0")
        full = adiabatic_chirp(system, "esr1")
        half = adiabatic_chirp(
            system, "esr1", duration_us=float(params.get("half_duration_us", 8.0))
        )
        segments = [half]
        n_pumps = int(wait_s / period_s + 1e-9)
        for _ in range(n_pumps):
            segments += [Delay(period_s * 1e6), full]
        segments.append(ReadMarker())
        return PulseSequence(segments=segments, label="t1ff-pump")
    if kind == "spectrum-scan":
        frequency_mhz = float(_require(params, "frequency_mhz", kind))
        channel = Channel(params.get("channel", Channel.EDSR))
        return PulseSequence(
            segments=[
                Tone(
                    frequency_mhz=frequency_mhz,
                    amplitude_v=float(params.get("amplitude_v", 0.4)),
                    duration_us=float(params.get("duration_us", 100.0)),
                    channel=channel,
                ),
                ReadMarker(),
            ],
            label="spectrum-scan",
        )
    raise ValueError(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")

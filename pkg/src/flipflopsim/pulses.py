"""Pulse segments, sequences and their on-disk representation.

A sequence is an ordered list of segments: constant-frequency tones,
linear frequency chirps, free-evolution delays and electron-readout
markers.  Sequences serialize to a small YAML document (schema in
docs/sequence_schema.md) so the CLI can load named experiments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import yaml


class Channel(enum.Enum):
    """Physical drive port a segment is played on."""

    ESR = "esr-magnetic"
    NMR = "nmr-magnetic"
    EDSR = "edsr-electric"


@dataclass(frozen=True)
class Tone:
    """Constant-frequency drive tone.

    ``amplitude_v`` is the oscillation amplitude referred to the gate.  For
    the electric channel it converts to hyperfine modulation through the
    Stark slope; for magnetic channels through the per-channel drive
    calibration in EvolutionConfig.
    """

    frequency_mhz: float
    amplitude_v: float
    duration_us: float
    channel: Channel
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.duration_us <= 0:
            raise ValueError("tone duration must be > 0")


@dataclass(frozen=True)
class Chirp:
    """Linear frequency sweep from f_start to f_end over the duration."""

    f_start_mhz: float
    f_end_mhz: float
    amplitude_v: float
    duration_us: float
    channel: Channel
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.duration_us <= 0:
            raise ValueError("chirp duration must be > 0")
        if self.f_start_mhz == self.f_end_mhz:
            raise ValueError("chirp must sweep a nonzero frequency range")

    @property
    def rate_mhz_per_us(self) -> float:
        return (self.f_end_mhz - self.f_start_mhz) / self.duration_us


@dataclass(frozen=True)
class Delay:
    """Free evolution for a fixed duration."""

    duration_us: float

    def __post_init__(self):
        if self.duration_us <= 0:
            raise ValueError("delay duration must be > 0")


@dataclass(frozen=True)
class ReadMarker:
    """Single-shot electron readout (and reload) at this point."""


PulseSegment = Union[Tone, Chirp, Delay, ReadMarker]


@dataclass
class PulseSequence:
    segments: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if not self.segments:
            raise ValueError("pulse sequence must contain at least one segment")

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return {"label": self.label, "segments": [_segment_to_dict(s) for s in self.segments]}

    @classmethod
    def from_dict(cls, doc: dict) -> "PulseSequence":
        if not isinstance(doc, dict) or "segments" not in doc:
            raise ValueError("sequence document must be a mapping with a 'segments' list")
        segments = [_segment_from_dict(d, i) for i, d in enumerate(doc["segments"])]
        return cls(segments=segments, label=doc.get("label", ""))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "PulseSequence":
        return cls.from_dict(yaml.safe_load(text))


def _segment_to_dict(seg: PulseSegment) -> dict:
    if isinstance(seg, Tone):
        return {
            "type": "tone",
            "frequency_mhz": seg.frequency_mhz,
            "amplitude_v": seg.amplitude_v,
            "duration_us": seg.duration_us,
            "channel": seg.channel.value,
            "phase_rad": seg.phase_rad,
        }
    if isinstance(seg, Chirp):
        return {
            "type": "chirp",
            "f_start_mhz": seg.f_start_mhz,
            "f_end_mhz": seg.f_end_mhz,
            "amplitude_v": seg.amplitude_v,
            "duration_us": seg.duration_us,
            "channel": seg.channel.value,
            "phase_rad": seg.phase_rad,
        }
    if isinstance(seg, Delay):
        return {"type": "delay", "duration_us": seg.duration_us}
    if isinstance(seg, ReadMarker):
        return {"type": "read"}
    raise TypeError(f"unknown segment type {type(seg)!r}")


def _segment_from_dict(doc: dict, index: int) -> PulseSegment:
    try:
        kind = doc["type"]
        if kind == "tone":
            return Tone(
                frequency_mhz=float(doc["frequency_mhz"]),
                amplitude_v=float(doc["amplitude_v"]),
                duration_us=float(doc["duration_us"]),
                channel=Channel(doc["channel"]),
                phase_rad=float(doc.get("phase_rad", 0.0)),
            )
        if kind == "chirp":
            return Chirp(
                f_start_mhz=float(doc["f_start_mhz"]),
                f_end_mhz=float(doc["f_end_mhz"]),
                amplitude_v=float(doc["amplitude_v"]),
                duration_us=float(doc["duration_us"]),
                channel=Channel(doc["channel"]),
                phase_rad=float(doc.get("phase_rad", 0.0)),
            )
        if kind == "delay":
            return Delay(duration_us=float(doc["duration_us"]))
        if kind == "read":
            return ReadMarker()
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"segments[{index}]: {exc}") from exc
    raise ValueError(f"segments[{index}]: unknown segment type {kind!r}")

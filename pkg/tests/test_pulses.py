"""Pulse segment types and YAML round-trip serialization."""

import pytest

from flipflopsim.pulses import Channel, Chirp, Delay, PulseSequence, ReadMarker, Tone


def _example_sequence():
    return PulseSequence(
        segments=[
            Tone(frequency_mhz=27.99, amplitude_v=0.4, duration_us=10.0,
                 channel=Channel.EDSR, phase_rad=0.5),
            Chirp(f_start_mhz=27900.0, f_end_mhz=27902.0, amplitude_v=1.0,
                  duration_us=200.0, channel=Channel.ESR),
            Delay(duration_us=5.0),
            ReadMarker(),
        ],
        label="example",
    )


def test_yaml_round_trip():
    seq = _example_sequence()
    text = seq.to_yaml()
    back = PulseSequence.from_yaml(text)
    assert back.label == "example"
    assert len(back) == 4
    assert back.segments == seq.segments


def test_chirp_rate():
    c = Chirp(f_start_mhz=10.0, f_end_mhz=14.0, amplitude_v=1.0,
              duration_us=8.0, channel=Channel.NMR)
    assert c.rate_mhz_per_us == 0.5


def test_segment_validation():
    with pytest.raises(ValueError):
        Tone(frequency_mhz=1.0, amplitude_v=0.1, duration_us=0.0, channel=Channel.ESR)
    with pytest.raises(ValueError):
        Chirp(f_start_mhz=5.0, f_end_mhz=5.0, amplitude_v=0.1, duration_us=1.0,
              channel=Channel.ESR)
    with pytest.raises(ValueError):
        Delay(duration_us=-1.0)
    with pytest.raises(ValueError):
        PulseSequence(segments=[])


def test_from_dict_errors_name_the_segment():
    with pytest.raises(ValueError, match=r"segments\[0\]"):
        PulseSequence.from_dict({"segments": [{"type": "tone"}]})
    with pytest.raises(ValueError, match=r"segments\[1\].*unknown segment"):
        PulseSequence.from_dict(
            {"segments": [{"type": "delay", "duration_us": 1.0}, {"type": "nope"}]}
        )
    with pytest.raises(ValueError, match="mapping"):
        PulseSequence.from_dict([])


def test_unknown_channel_rejected():
    with pytest.raises(ValueError):
        PulseSequence.from_dict(
            {"segments": [{"type": "tone", "frequency_mhz": 1, "amplitude_v": 1,
                           "duration_us": 1, "channel": "optical"}]}
        )

"""Virtual-experiment simulator for a donor electron-nuclear flip-flop qubit."""

from ._kernels import BACKEND as kernel_backend
from .constants import DonorParameters, PhysicalConstants
from .engine import (
    CalibrationError,
    EvolutionConfig,
    SpinSystem,
    StepSizeError,
    adiabatic_inversion_probability,
    calibrate_half_adiabatic,
    propagate,
    run_sequence,
)
from .hamiltonian import (
    TransitionFrequencies,
    build_full_hamiltonian,
    eigensystem,
    flipflop_gap_mhz,
    flipflop_rabi_frequency,
    transition_frequencies,
    truncate_flipflop,
)
from .noise import (
    DephasingModel,
    NoiseEnvironment,
    NoiseRealization,
    RelaxationRates,
    Si29Bath,
    apply_relaxation,
    combined_t1,
    sample_realization,
    si29_offset,
)
from .pulses import Channel, Chirp, Delay, PulseSequence, ReadMarker, Tone
from .readout import (
    EndorConfig,
    NuclearReadResult,
    ReadoutParams,
    ShotRecord,
    electron_single_shot,
    endor_initialize,
    flip_probability,
    nuclear_read,
)
from .sequences import SEQUENCE_KINDS, build_standard_sequence
from .states import QuantumState

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CalibrationError",
    "Channel",
    "Chirp",
    "Delay",
    "DephasingModel",
    "DonorParameters",
    "EndorConfig",
    "EvolutionConfig",
    "NoiseEnvironment",
    "NoiseRealization",
    "NuclearReadResult",
    "PhysicalConstants",
    "PulseSequence",
    "QuantumState",
    "ReadMarker",
    "ReadoutParams",
    "RelaxationRates",
    "SEQUENCE_KINDS",
    "ShotRecord",
    "Si29Bath",
    "SpinSystem",
    "StepSizeError",
    "Tone",
    "TransitionFrequencies",
    "adiabatic_inversion_probability",
    "apply_relaxation",
    "build_full_hamiltonian",
    "build_standard_sequence",
    "calibrate_half_adiabatic",
    "combined_t1",
    "eigensystem",
    "electron_single_shot",
    "endor_initialize",
    "flip_probability",
    "flipflop_gap_mhz",
    "flipflop_rabi_frequency",
    "kernel_backend",
    "nuclear_read",
    "propagate",
    "run_sequence",
    "sample_realization",
    "si29_offset",
    "transition_frequencies",
    "truncate_flipflop",
]

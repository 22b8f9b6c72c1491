"""Declarative experiment specs, validation and the experiment runner.

An experiment is described by a YAML document (schema in
docs/experiment_schema.md) with a mandatory seed; running it produces a
bundle directory containing data.csv plus metadata.json with the full
config and environment snapshot.  Identical (spec, seed) pairs produce
byte-identical outputs: randomness comes from named streams derived from
the master seed, so execution order cannot change results.
"""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .constants import DonorParameters, PhysicalConstants
from .engine import EvolutionConfig, SpinSystem, propagate
from .fitting import (
    Dataset,
    cluster_frequencies,
    edsr_attenuation,
    fit_stretched_exp,
    set_attenuation,
)
from .hamiltonian import DOWN_DOWN, DOWN_UP, UP_DOWN, UP_UP
from .noise import (
    DephasingModel,
    NoiseEnvironment,
    NoiseRealization,
    RelaxationRates,
    Si29Bath,
    sample_realization,
)
from .pulses import Channel, Tone
from .rb import RBConfig, fit_rb, run_rb
from .readout import EndorConfig, ReadoutParams, endor_fidelity, sample_blips
from .sequences import build_standard_sequence
from .states import QuantumState
from .triangulate import (
    DeviceGeometry,
    SlopeMeasurement,
    argmax_region,
    likelihood_map,
    predicted_slope_field,
    solve_responses,
)

EXPERIMENT_KINDS = (
    "spectrum",
    "rabi",
    "chevron",
    "ramsey",
    "hahn",
    "t1e",
    "t1ff-pump",
    "endor-fidelity",
    "rb",
    "calibrate-attenuation",
    "triangulate",
    "si29-monitor",
)


class SpecError(ValueError):
    """The experiment spec failed validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream derived from the master seed by stream name.

    The name hashes to a spawn key, so streams are stable under reordering
    and parallel execution.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


# -- schema -----------------------------------------------------------------

_PHYSICS_KEYS = {"b0_t", "a_hf_mhz", "stark_slope_khz_per_v", "gamma_n_mhz_per_t"}
_ENV_KEYS = {
    "t1e_s", "t1ff_s", "t1n_s", "sigma_khz",
    "si29_couplings_khz", "si29_flip_rate_per_s", "shot_interval_s",
}
_READOUT_KEYS = {
    "tunnel_out_rate", "tunnel_in_rate", "detection_window",
    "blip_miss_probability", "dark_blip_probability", "reload_error_probability",
}
_TOP_KEYS = {"kind", "seed", "label", "physics", "env", "readout", "sweep", "shots", "params"}

#: kind -> (required sweep keys, allowed sweep keys, allowed params keys)
_KIND_SCHEMA = {
    "spectrum": ({"start_mhz", "stop_mhz", "points"}, {"start_mhz", "stop_mhz", "points"},
                 {"channel", "amplitude_v", "duration_us", "realizations"}),
    "rabi": ({"start_us", "stop_us", "points"}, {"start_us", "stop_us", "points"},
             {"amplitude_v", "frequency_mhz", "realizations"}),
    "chevron": ({"detuning_span_khz", "detuning_points", "stop_us", "time_points"},
                {"detuning_span_khz", "detuning_points", "stop_us", "time_points"},
                {"amplitude_v"}),
    "ramsey": ({"start_us", "stop_us", "points"}, {"start_us", "stop_us", "points"},
               {"amplitude_v", "realizations"}),
    "hahn": ({"start_us", "stop_us", "points"}, {"start_us", "stop_us", "points"},
             {"amplitude_v", "realizations"}),
    "t1e": ({"start_s", "stop_s", "points"}, {"start_s", "stop_s", "points"},
            {"trajectories"}),
    "t1ff-pump": ({"start_s", "stop_s", "points"}, {"start_s", "stop_s", "points"},
                  {"trajectories", "pump_period_s", "inversion_fidelity", "trace_resolution_s"}),
    "endor-fidelity": (set(), set(),
                       {"trials", "aesr2_fidelity", "anmr1_fidelity", "electron_init_error"}),
    "rb": (set(), set(),
           {"lengths", "sequences_per_length", "error_per_gate", "pi_rotation_fraction"}),
    "calibrate-attenuation": (set(), set(),
                              {"rabi_slope_khz_per_v", "stark_slope_khz_per_v",
                               "k_mw", "k_100hz"}),
    "triangulate": (set(), set(),
                    {"layout_file", "layout", "measurements", "noise_fraction",
                     "prior_y_range_nm"}),
    "si29-monitor": ({"samples"}, {"samples"}, {"min_separation_khz"}),
}


def validate(doc) -> list:
    """Validate a spec document; returns a list of 'path: message' strings."""
    errors = []
    if not isinstance(doc, dict):
        return ["spec: document must be a mapping"]
    for key in doc:
        if key not in _TOP_KEYS:
            errors.append(f"{key}: unknown key")
    kind = doc.get("kind")
    if kind is None:
        errors.append("kind: missing")
    elif kind not in _KIND_SCHEMA:
        errors.append(
            f"kind: unknown kind {kind!r}; allowed: {', '.join(EXPERIMENT_KINDS)}"
        )
    if "seed" not in doc:
        errors.append("seed: missing (a master seed is mandatory)")
    elif not isinstance(doc["seed"], int):
        errors.append("seed: must be an integer")
    for section, allowed in (("physics", _PHYSICS_KEYS), ("env", _ENV_KEYS),
                             ("readout", _READOUT_KEYS)):
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            errors.append(f"{section}: must be a mapping")
            continue
        for key in sub:
            if key not in allowed:
                errors.append(f"{section}.{key}: unknown key")
    if kind in _KIND_SCHEMA:
        required, allowed_sweep, allowed_params = _KIND_SCHEMA[kind]
        sweep = doc.get("sweep", {})
        if not isinstance(sweep, dict):
            errors.append("sweep: must be a mapping")
            sweep = {}
        for key in required:
            if key not in sweep:
                errors.append(f"sweep.{key}: missing (required for kind {kind!r})")
        for key in sweep:
            if key not in allowed_sweep:
                errors.append(f"sweep.{key}: unknown key for kind {kind!r}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            errors.append("params: must be a mapping")
            params = {}
        for key in params:
            if key not in allowed_params:
                errors.append(f"params.{key}: unknown key for kind {kind!r}")
    shots = doc.get("shots")
    if shots is not None and (not isinstance(shots, int) or shots < 1):
        errors.append("shots: must be a positive integer")
    return errors


def load_spec(path) -> dict:
    doc = yaml.safe_load(Path(path).read_text())
    errors = validate(doc)
    if errors:
        raise SpecError(errors)
    return doc


def _build_context(doc):
    phys = doc.get("physics", {})
    constants = PhysicalConstants(
        gamma_n_mhz_per_t=float(phys.get("gamma_n_mhz_per_t", 17.23))
    )
    params = DonorParameters(
        b0_t=float(phys.get("b0_t", 1.0)),
        a_hf_mhz=float(phys.get("a_hf_mhz", 114.1)),
        stark_slope_khz_per_v=float(phys.get("stark_slope_khz_per_v", 512.0)),
    )
    envd = doc.get("env", {})
    env = NoiseEnvironment(
        relaxation=RelaxationRates(
            t1e_s=float(envd.get("t1e_s", 6.45)),
            t1ff_s=float(envd.get("t1ff_s", 173.0)),
            t1n_s=float(envd.get("t1n_s", math.inf)),
        ),
        dephasing=DephasingModel(
            quasi_static_sigma_khz=float(envd.get("sigma_khz", 0.0))
        ),
        si29=Si29Bath(
            couplings_khz=tuple(envd.get("si29_couplings_khz", ())),
            flip_rate_per_s=float(envd.get("si29_flip_rate_per_s", 0.0)),
        ),
        shot_interval_s=float(envd.get("shot_interval_s", 1.0)),
    )
    readout = ReadoutParams(**doc.get("readout", {}))
    system = SpinSystem(params, constants)
    return system, env, readout


@dataclass(frozen=True)
class ResultBundle:
    kind: str
    columns: tuple
    rows: tuple
    summary: dict
    metadata: dict

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(v) for v in row])
        return buf.getvalue()

    def write(self, outdir) -> Path:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "data.csv").write_text(self.csv_text())
        meta = dict(self.metadata)
        meta["summary"] = self.summary
        (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        return out


def _format_cell(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return v


def run(doc: dict) -> ResultBundle:
    """Run a validated experiment spec and return its result bundle."""
    errors = validate(doc)
    if errors:
        raise SpecError(errors)
    kind = doc["kind"]
    system, env, readout = _build_context(doc)
    runner = _RUNNERS[kind]
    columns, rows, summary = runner(doc, system, env, readout)
    metadata = {
        "spec": doc,
        "version": __version__,
        "environment": env.to_dict(),
        "kind": kind,
    }
    return ResultBundle(
        kind=kind, columns=tuple(columns), rows=tuple(tuple(r) for r in rows),
        summary=summary, metadata=metadata,
    )


# -- kind runners -----------------------------------------------------------

def _linspace(a, b, n):
    return np.linspace(float(a), float(b), int(n))


def _excited_probability(system, env, config, segments, start_level, rng, realizations):
    """Mean electron-up population over frozen noise realizations."""
    total = 0.0
    prev = None
    for _ in range(realizations):
        if env.dephasing.quasi_static_sigma_khz or env.si29.couplings_khz:
            prev = sample_realization(env, rng, prev)
            realization = prev
        else:
            realization = NoiseRealization()
        state = QuantumState.basis_state(start_level)
        for seg in segments:
            state = propagate(state, seg, system, realization, config)
        total += state.electron_up_population()
    return total / realizations


def _run_spectrum(doc, system, env, readout):
    sweep = doc["sweep"]
    params = doc.get("params", {})
    config = EvolutionConfig()
    rng = named_rng(doc["seed"], "spectrum")
    shots = int(doc.get("shots", 50))
    realizations = int(params.get("realizations", 10))
    channel = Channel(params.get("channel", "edsr-electric"))
    amplitude = float(params.get("amplitude_v", 0.1))
    duration = float(params.get("duration_us", 50.0))
    rows = []
    for f in _linspace(sweep["start_mhz"], sweep["stop_mhz"], sweep["points"]):
        tone = Tone(frequency_mhz=float(f), amplitude_v=amplitude,
                    duration_us=duration, channel=channel)
        p = _excited_probability(system, env, config, [tone], DOWN_UP, rng, realizations)
        blips = int(sample_blips(p, shots, readout, rng).sum())
        rows.append((float(f), p, blips / shots))
    peak = max(rows, key=lambda r: r[2])
    return (
        ("frequency_mhz", "excited_population", "up_proportion"),
        rows,
        {"peak_frequency_mhz": peak[0], "peak_up_proportion": peak[2]},
    )


def _run_rabi(doc, system, env, readout):
    sweep = doc["sweep"]
    params = doc.get("params", {})
    config = EvolutionConfig()
    rng = named_rng(doc["seed"], "rabi")
    shots = int(doc.get("shots", 50))
    realizations = int(params.get("realizations", 10))
    amplitude = float(params.get("amplitude_v", 0.4))
    frequency = float(params.get("frequency_mhz", system.ff_gap_mhz()))
    rows = []
    for t in _linspace(sweep["start_us"], sweep["stop_us"], sweep["points"]):
        tone = Tone(frequency_mhz=frequency, amplitude_v=amplitude,
                    duration_us=float(t), channel=Channel.EDSR)
        p = _excited_probability(system, env, config, [tone], DOWN_UP, rng, realizations)
        blips = int(sample_blips(p, shots, readout, rng).sum())
        rows.append((float(t), p, blips / shots))
    f_rabi = system.rabi_frequency_mhz(Channel.EDSR, amplitude, config)
    return (
        ("duration_us", "excited_population", "up_proportion"),
        rows,
        {"drive_rabi_mhz": f_rabi},
    )


def _run_chevron(doc, system, env, readout):
    sweep = doc["sweep"]
    params = doc.get("params", {})
    config = EvolutionConfig()
    amplitude = float(params.get("amplitude_v", 0.4))
    f0 = system.ff_gap_mhz()
    detunings = _linspace(
        -sweep["detuning_span_khz"] / 2, sweep["detuning_span_khz"] / 2,
        sweep["detuning_points"],
    )
    times = _linspace(0.0, sweep["stop_us"], sweep["time_points"])[1:]
    rows = []
    for d_khz in detunings:
        for t in times:
            tone = Tone(frequency_mhz=f0 + d_khz * 1e-3, amplitude_v=amplitude,
                        duration_us=float(t), channel=Channel.EDSR)
            state = propagate(QuantumState.basis_state(DOWN_UP), tone, system,
                              config=config)
            rows.append((float(d_khz), float(t), state.population(UP_DOWN)))
    return (
        ("detuning_khz", "duration_us", "excited_population"),
        rows,
        {"rabi_mhz": system.rabi_frequency_mhz(Channel.EDSR, amplitude, config)},
    )


def _coherence_rows(doc, system, env, kind_label, build):
    params = doc.get("params", {})
    sweep = doc["sweep"]
    config = EvolutionConfig()
    rng = named_rng(doc["seed"], kind_label)
    realizations = int(params.get("realizations", 50))
    rows = []
    for tau in _linspace(sweep["start_us"], sweep["stop_us"], sweep["points"]):
        seq = build(float(tau))
        segments = list(seq.segments)[:-1]   # drop the trailing ReadMarker
        p = _excited_probability(system, env, config, segments, DOWN_UP, rng, realizations)
        rows.append((float(tau), p))
    return rows


def _run_ramsey(doc, system, env, readout):
    params = doc.get("params", {})
    amplitude = float(params.get("amplitude_v", 0.4))
    config = EvolutionConfig()

    def build(tau):
        return build_standard_sequence("ramsey", system, config,
                                       tau_us=tau, amplitude_v=amplitude)

    rows = _coherence_rows(doc, system, env, "ramsey", build)
    return (("tau_us", "excited_population"), rows, {})


def _run_hahn(doc, system, env, readout):
    params = doc.get("params", {})
    amplitude = float(params.get("amplitude_v", 0.4))
    config = EvolutionConfig()

    def build(tau):
        return build_standard_sequence("hahn-echo", system, config,
                                       tau_us=tau, amplitude_v=amplitude)

    rows = _coherence_rows(doc, system, env, "hahn", build)
    return (("tau_us", "excited_population"), rows, {})


def _markov_step(levels, transition, rng):
    """Advance classical level indices through one Markov transition matrix."""
    out = np.empty_like(levels)
    for lvl in range(4):
        mask = levels == lvl
        n = int(mask.sum())
        if n:
            out[mask] = rng.choice(4, size=n, p=transition[lvl])
    return out


def _run_t1e(doc, system, env, readout):
    from .noise import relaxation_transition_matrix

    sweep = doc["sweep"]
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "t1e")
    trajectories = int(params.get("trajectories", 2000))
    rows = []
    for t in _linspace(sweep["start_s"], sweep["stop_s"], sweep["points"]):
        transition = relaxation_transition_matrix(env.relaxation, float(t))
        levels = _markov_step(
            np.full(trajectories, UP_DOWN), transition, rng
        )
        p_up = float(np.isin(levels, (UP_UP, UP_DOWN)).mean())
        rows.append((float(t), p_up))
    data = Dataset.from_arrays([r[0] for r in rows], [r[1] for r in rows])
    summary = {}
    try:
        fit = fit_stretched_exp(data)
        summary = {"fitted_t1_s": fit.params["t2"], "fitted_beta": fit.params["beta"]}
    except Exception as exc:  # fit is advisory; data rows are the deliverable
        summary = {"fit_error": str(exc)}
    return (("wait_s", "electron_up_population"), rows, summary)


def t1ff_pump_trajectories(
    env: NoiseEnvironment,
    rng: np.random.Generator,
    wait_s: float,
    pump_period_s: float = 5.0,
    inversion_fidelity: float = 0.98,
    trajectories: int = 1000,
    trace_resolution_s: float = 0.25,
):
    """Classical pumping protocol: half inversion, then inversions each period.

    Starts from |down,down> (nuclear down).  Returns (times, mean |up,down>
    occupancy trace over all trajectories, occupancy conditioned on the
    nucleus not having flipped, and the nuclear-flip probability at
    wait_s).  The flip-flop decay |up,down> -> |down,up> flips the nucleus
    and parks the trajectory (the pump addresses only the nuclear-down
    manifold).
    """
    from .noise import relaxation_transition_matrix

    n_steps = int(round(wait_s / trace_resolution_s))
    step_matrix = relaxation_transition_matrix(env.relaxation, trace_resolution_s)
    pump_every = max(1, int(round(pump_period_s / trace_resolution_s)))
    levels = np.full(trajectories, DOWN_DOWN)
    # Half-adiabatic pulse at t=0: invert half of the nuclear-down manifold.
    flip = (rng.random(trajectories) < 0.5) & np.isin(levels, (UP_DOWN, DOWN_DOWN))
    levels = np.where(flip, np.where(levels == DOWN_DOWN, UP_DOWN, DOWN_DOWN), levels)
    def _conditional(lv):
        down = np.isin(lv, (UP_DOWN, DOWN_DOWN))
        n_down = int(down.sum())
        return float((lv == UP_DOWN).sum() / n_down) if n_down else 0.0

    times = [0.0]
    occupancy = [float((levels == UP_DOWN).mean())]
    conditional = [_conditional(levels)]
    for step in range(1, n_steps + 1):
        levels = _markov_step(levels, step_matrix, rng)
        if step % pump_every == 0:
            flip = (rng.random(trajectories) < inversion_fidelity) & np.isin(
                levels, (UP_DOWN, DOWN_DOWN)
            )
            levels = np.where(
                flip, np.where(levels == DOWN_DOWN, UP_DOWN, DOWN_DOWN), levels
            )
        times.append(step * trace_resolution_s)
        occupancy.append(float((levels == UP_DOWN).mean()))
        conditional.append(_conditional(levels))
    flipped = float(np.isin(levels, (UP_UP, DOWN_UP)).mean())
    return np.array(times), np.array(occupancy), np.array(conditional), flipped


def _run_t1ff_pump(doc, system, env, readout):
    sweep = doc["sweep"]
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "t1ff-pump")
    trajectories = int(params.get("trajectories", 1000))
    period = float(params.get("pump_period_s", 5.0))
    fidelity = float(params.get("inversion_fidelity", 0.98))
    resolution = float(params.get("trace_resolution_s", 0.25))
    rows = []
    conditional_means = []
    for wait in _linspace(sweep["start_s"], sweep["stop_s"], sweep["points"]):
        _, occ, cond, flipped = t1ff_pump_trajectories(
            env, rng, float(wait), period, fidelity, trajectories, resolution
        )
        conditional_means.append(float(cond.mean()))
        rows.append((float(wait), flipped, float(occ.mean())))
    # The nuclear flip rate is (occupancy of |up,down> while still
    # nuclear-down) / T1ff; correct the fitted decay constant by that mean
    # conditional occupancy to estimate T1ff.
    waits = np.array([r[0] for r in rows])
    flips = np.array([r[1] for r in rows])
    mean_occ = float(np.mean(conditional_means))
    summary = {"mean_conditional_occupancy": mean_occ}
    good = flips < 0.999
    if good.sum() >= 3 and mean_occ > 0:
        # log-linear fit of survival = 1 - flip probability
        slope = np.polyfit(waits[good], np.log(1.0 - flips[good]), 1)[0]
        if slope < 0:
            t_obs = -1.0 / slope
            summary["observed_decay_s"] = float(t_obs)
            summary["t1ff_estimate_s"] = float(t_obs * mean_occ)
    return (("wait_s", "nuclear_flip_probability", "mean_up_down_occupancy"), rows, summary)


def _run_endor_fidelity(doc, system, env, readout):
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "endor")
    config = EndorConfig(
        aesr2_fidelity=float(params.get("aesr2_fidelity", 0.99)),
        anmr1_fidelity=float(params.get("anmr1_fidelity", 0.99)),
        electron_init_error=float(params.get("electron_init_error", 0.09)),
    )
    trials = int(params.get("trials", 20000))
    fid = endor_fidelity(config, trials, rng, env)
    return (
        ("trials", "fidelity"),
        [(trials, fid)],
        {"fidelity": fid, "config": {
            "aesr2_fidelity": config.aesr2_fidelity,
            "anmr1_fidelity": config.anmr1_fidelity,
            "electron_init_error": config.electron_init_error,
        }},
    )


def _run_rb(doc, system, env, readout):
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "rb")
    config = RBConfig(
        lengths=tuple(params.get("lengths", (1, 2, 4, 8, 16, 32, 65))),
        sequences_per_length=int(params.get("sequences_per_length", 20)),
        shots=int(doc.get("shots", 100)),
        depolarizing_error_per_gate=float(params.get("error_per_gate", 0.0)),
        pi_rotation_fraction=params.get("pi_rotation_fraction"),
    )
    points = run_rb(config, env, rng)
    result = fit_rb(points)
    rows = [(p.length, p.survival, p.stderr, p.discards) for p in points]
    return (
        ("length", "survival", "stderr", "discards"),
        rows,
        {
            "p": result.p,
            "f_clifford": result.f_clifford,
            "f_native": result.f_native,
            "p_stderr": result.p_stderr,
            "mean_gates_per_clifford": result.mean_gates,
        },
    )


def _run_calibrate_attenuation(doc, system, env, readout):
    params = doc.get("params", {})
    rabi_slope = float(params.get("rabi_slope_khz_per_v", 32.0))
    stark_slope = float(params.get("stark_slope_khz_per_v",
                                   system.params.stark_slope_khz_per_v))
    k_mw = float(params.get("k_mw", 0.050))
    k_100hz = float(params.get("k_100hz", 0.46))
    edsr_ratio, edsr_db = edsr_attenuation(rabi_slope, stark_slope)
    set_ratio, set_db = set_attenuation(k_mw, k_100hz)
    rows = [
        ("edsr", edsr_ratio, edsr_db),
        ("set", set_ratio, set_db),
    ]
    return (
        ("method", "ratio", "attenuation_db"),
        rows,
        {"edsr_ratio": edsr_ratio, "edsr_db": edsr_db,
         "set_ratio": set_ratio, "set_db": set_db},
    )


def _default_layout() -> dict:
    """Small twin-gate layout used when the spec embeds no geometry."""
    return {
        "extent_nm": [80.0, 40.0, 80.0],
        "spacing_nm": 4.0,
        "gates": [
            {"name": "g1", "footprint_xz_nm": [[8, 28], [28, 28], [28, 52], [8, 52]],
             "y_range_nm": [0, 4]},
            {"name": "g2", "footprint_xz_nm": [[52, 28], [72, 28], [72, 52], [52, 52]],
             "y_range_nm": [0, 4]},
            {"name": "g3", "footprint_xz_nm": [[28, 8], [52, 8], [52, 24], [28, 24]],
             "y_range_nm": [0, 4]},
        ],
        "grounds": [
            {"name": "electron-layer",
             "footprint_xz_nm": [[0, 0], [80, 0], [80, 80], [0, 80]],
             "y_range_nm": [36, 40]},
        ],
    }


def _run_triangulate(doc, system, env, readout):
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "triangulate")
    if "layout_file" in params:
        geometry = DeviceGeometry.from_yaml(Path(params["layout_file"]).read_text())
    else:
        geometry = DeviceGeometry.from_yaml(
            yaml.safe_dump(params.get("layout", _default_layout()))
        )
    responses = solve_responses(geometry)
    gate_names = [g.name for g in geometry.gates]
    pairs = [(gate_names[i], gate_names[j])
             for i in range(len(gate_names)) for j in range(i + 1, len(gate_names))]
    noise_fraction = float(params.get("noise_fraction", 0.0))
    if "measurements" in params:
        measurements = [
            SlopeMeasurement(gate_pair=tuple(m["gate_pair"]), slope=float(m["slope"]))
            for m in params["measurements"]
        ]
        planted = None
    else:
        # Plant a donor at a deterministic interior cell and synthesize slopes.
        shape = geometry.shape
        planted = (shape[0] // 3, shape[1] // 2, shape[2] // 2)
        measurements = []
        for pair in pairs:
            s = predicted_slope_field(responses, pair)[planted]
            if not np.isfinite(s):
                continue
            noisy = float(s) * (1.0 + noise_fraction * rng.standard_normal())
            measurements.append(SlopeMeasurement(gate_pair=pair, slope=noisy))
    mask = None
    if "prior_y_range_nm" in params:
        lo, hi = (float(v) for v in params["prior_y_range_nm"])
        ax_y = geometry.axes_nm()[1]
        mask = np.zeros(geometry.shape, dtype=bool)
        mask[:, (ax_y >= lo) & (ax_y <= hi), :] = True
    p = likelihood_map(measurements, responses, mask)
    region = argmax_region(p, mass=0.9)
    rows = []
    for idx in np.argwhere(p > 0):
        rows.append((int(idx[0]), int(idx[1]), int(idx[2]), float(p[tuple(idx)])))
    summary = {
        "argmax_index": list(region.argmax_index),
        "credible_cells": len(region.cells),
        "axis_intervals": [list(i) for i in region.axis_intervals],
        "spacing_nm": geometry.spacing_nm,
    }
    if planted is not None:
        summary["planted_index"] = list(planted)
        summary["planted_in_region"] = bool(
            tuple(planted) in {tuple(np.unravel_index(c, p.shape)) for c in region.cells}
        )
    return (("ix", "iy", "iz", "probability"), rows, summary)


def _run_si29_monitor(doc, system, env, readout):
    sweep = doc["sweep"]
    params = doc.get("params", {})
    rng = named_rng(doc["seed"], "si29")
    n = int(sweep["samples"])
    min_sep = float(params.get("min_separation_khz", 40.0))
    rows = []
    offsets = []
    prev = None
    for i in range(n):
        prev = sample_realization(env, rng, prev)
        off = prev.offset_khz("ff")
        offsets.append(off)
        rows.append((i, off, "".join("+" if s > 0 else "-" for s in prev.si29_config)))
    clusters = cluster_frequencies(offsets, min_sep) if offsets else []
    return (
        ("sample", "ff_offset_khz", "si29_config"),
        rows,
        {"clusters": [
            {"center_khz": c.center, "width_khz": c.width, "count": c.count}
            for c in clusters
        ]},
    )


_RUNNERS = {
    "spectrum": _run_spectrum,
    "rabi": _run_rabi,
    "chevron": _run_chevron,
    "ramsey": _run_ramsey,
    "hahn": _run_hahn,
    "t1e": _run_t1e,
    "t1ff-pump": _run_t1ff_pump,
    "endor-fidelity": _run_endor_fidelity,
    "rb": _run_rb,
    "calibrate-attenuation": _run_calibrate_attenuation,
    "triangulate": _run_triangulate,
    "si29-monitor": _run_si29_monitor,
}

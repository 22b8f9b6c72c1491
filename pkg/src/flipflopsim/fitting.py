"""Least-squares fits for decay, oscillation and spectrum shapes, plus the
attenuation-calibration arithmetic and 1-D frequency clustering.

All fitters use damped least squares (Levenberg-Marquardt) with
model-specific initialization heuristics: log-linear regression for
exponential decays, the discrete spectral peak for sinusoids, local maxima
for Gaussian mixtures.  Fits are deterministic: identical data yields
identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit


@dataclass(frozen=True)
class Dataset:
    x: tuple
    y: tuple
    y_err: tuple | None = None

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y lengths differ")
        if self.y_err is not None and len(self.y_err) != len(self.x):
            raise ValueError("y_err length differs from x")

    @classmethod
    def from_arrays(cls, x, y, y_err=None) -> "Dataset":
        return cls(
            x=tuple(float(v) for v in x),
            y=tuple(float(v) for v in y),
            y_err=None if y_err is None else tuple(float(v) for v in y_err),
        )

    def arrays(self):
        x = np.array(self.x)
        y = np.array(self.y)
        err = None if self.y_err is None else np.array(self.y_err)
        return x, y, err

    def require_increasing(self):
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x must be strictly increasing for decay fits")


class FitError(RuntimeError):
    """Fit did not converge or the problem is degenerate."""


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    param_order: tuple = field(default=())

    def sigma(self, name: str) -> float:
        """1-sigma uncertainty of a parameter from the covariance diagonal."""
        i = self.param_order.index(name)
        var = self.covariance[i, i]
        return math.sqrt(var) if var >= 0 else float("nan")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "sigma": {k: self.sigma(k) for k in self.param_order},
            "residual_norm": self.residual_norm,
            "converged": self.converged,
        }


def _run_fit(model_name, func, x, y, p0, bounds, names, sigma=None) -> FitResult:
    try:
        popt, pcov = curve_fit(
            func, x, y, p0=p0, bounds=bounds, sigma=sigma,
            absolute_sigma=sigma is not None, maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"{model_name} fit failed: {exc}") from exc
    residual = float(np.linalg.norm(func(x, *popt) - y))
    return FitResult(
        model=model_name,
        params={n: float(v) for n, v in zip(names, popt)},
        covariance=np.asarray(pcov),
        residual_norm=residual,
        converged=True,
        param_order=tuple(names),
    )


# -- decay and oscillation fits ---------------------------------------------

def stretched_exp(t, amplitude, t2, beta, offset):
    return amplitude * np.exp(-np.power(np.asarray(t) / t2, beta)) + offset


def fit_stretched_exp(data: Dataset) -> FitResult:
    """Fit amplitude * exp(-(t/T2)^beta) + offset."""
    data.require_increasing()
    t, y, err = data.arrays()
    if len(t) < 5:
        raise ValueError("need at least 5 points")
    offset0 = float(y[-max(1, len(y) // 5):].mean())
    amp0 = float(y[0] - offset0)
    if amp0 == 0.0:
        amp0 = float(np.ptp(y)) or 1.0
    # Log-linear regression for (T2, beta) on usable interior points.
    frac = (y - offset0) / amp0
    mask = (frac > 0.02) & (frac < 0.98) & (t > 0)
    if mask.sum() >= 2:
        u = np.log(t[mask])
        v = np.log(-np.log(frac[mask]))
        beta0, logc = np.polyfit(u, v, 1)
        beta0 = float(np.clip(beta0, 0.3, 4.0))
        t20 = float(np.exp(-logc / beta0))
    else:
        beta0, t20 = 1.0, float(t[len(t) // 2])
    span = float(t[-1])
    return _run_fit(
        "stretched-exp",
        stretched_exp,
        t,
        y,
        p0=[amp0, min(max(t20, t[1] / 10), span * 10), beta0, offset0],
        bounds=([-10.0, t[1] * 1e-3, 0.1, -10.0], [10.0, span * 1e3, 6.0, 10.0]),
        names=("amplitude", "t2", "beta", "offset"),
        sigma=err,
    )


def damped_sinusoid(t, amplitude, tau, frequency, phase, offset):
    t = np.asarray(t)
    return amplitude * np.exp(-t / tau) * np.sin(2 * np.pi * frequency * t + phase) + offset


def _spectral_peak(t, y) -> float:
    """Dominant nonzero frequency of a uniformly sampled trace."""
    dt = float(np.mean(np.diff(t)))
    detrended = y - y.mean()
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(len(t), dt)
    if len(spectrum) < 2:
        return 1.0 / (t[-1] - t[0])
    return float(freqs[1 + int(np.argmax(spectrum[1:]))])


def fit_damped_sinusoid(data: Dataset) -> FitResult:
    """Fit amplitude * exp(-t/tau) * sin(2 pi f t + phase) + offset."""
    t, y, err = data.arrays()
    if len(t) < 8:
        raise ValueError("need at least 8 points")
    f0 = _spectral_peak(t, y)
    span = float(t[-1] - t[0])
    if f0 * span < 2.0:
        raise ValueError("need at least 2 oscillation periods in the data span")
    offset0 = float(y.mean())
    amp0 = float(math.sqrt(2.0) * y.std())
    # Phase from quadrature projection at the initial frequency.
    c = np.cos(2 * np.pi * f0 * t)
    s = np.sin(2 * np.pi * f0 * t)
    phase0 = math.atan2(float((y - offset0) @ c), float((y - offset0) @ s))
    return _run_fit(
        "damped-sinusoid",
        damped_sinusoid,
        t,
        y,
        p0=[amp0, 2 * span, f0, phase0, offset0],
        bounds=(
            [0.0, span * 1e-3, f0 / 4.0, -2 * math.pi, -10.0],
            [10.0, 1e9, f0 * 4.0, 2 * math.pi, 10.0],
        ),
        names=("amplitude", "tau", "frequency", "phase", "offset"),
        sigma=err,
    )


# -- spectra ----------------------------------------------------------------

def gaussian_mixture(x, *params):
    """Sum of n Gaussians plus a constant; params = n*(amp, mean, sigma) + (c,)."""
    x = np.asarray(x)
    n = (len(params) - 1) // 3
    out = np.full_like(x, float(params[-1]), dtype=float)
    for k in range(n):
        amp, mean, sigma = params[3 * k: 3 * k + 3]
        out = out + amp * np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    return out


def fit_gaussian_mixture(data: Dataset, n_peaks: int) -> FitResult:
    """Fit a sum of 1-3 Gaussians with a constant baseline."""
    if n_peaks not in (1, 2, 3):
        raise ValueError("n_peaks must be 1, 2 or 3")
    x, y, err = data.arrays()
    if len(x) < 3 * n_peaks + 1:
        raise ValueError("not enough points for the requested peak count")
    base0 = float(np.percentile(y, 10))
    span = float(x[-1] - x[0]) or 1.0
    # Peak seeds: greedy maxima with exclusion windows.
    residual = y - base0
    seeds = []
    excluded = np.zeros(len(x), dtype=bool)
    for _ in range(n_peaks):
        masked = np.where(excluded, -np.inf, residual)
        i = int(np.argmax(masked))
        seeds.append((max(float(residual[i]), 1e-9), float(x[i]), span / (6 * n_peaks)))
        excluded |= np.abs(x - x[i]) < span / (2 * n_peaks + 1)
    p0, lo, hi, names = [], [], [], []
    for k, (amp, mean, width) in enumerate(sorted(seeds, key=lambda s: s[1])):
        p0 += [amp, mean, width]
        lo += [0.0, float(x[0]) - span, span * 1e-4]
        hi += [np.inf, float(x[-1]) + span, span]
        names += [f"amp{k}", f"mean{k}", f"sigma{k}"]
    p0.append(base0)
    lo.append(-np.inf)
    hi.append(np.inf)
    names.append("baseline")
    result = _run_fit(
        f"gaussian-{n_peaks}", gaussian_mixture, x, y, p0, (lo, hi), names, sigma=err
    )
    _warn_degenerate_peaks(result, n_peaks)
    return result


def _warn_degenerate_peaks(result: FitResult, n_peaks: int):
    """Flag overlapping peaks by re-raising as a degeneracy error."""
    means = sorted(result.params[f"mean{k}"] for k in range(n_peaks))
    sigmas = [result.params[f"sigma{k}"] for k in range(n_peaks)]
    for a, b in zip(means, means[1:]):
        if abs(b - a) < 0.1 * min(sigmas):
            raise FitError(
                f"degenerate peaks at {a:.6g} and {b:.6g}: separation below widths"
            )


def excess_broadening(width: float, reference_width: float) -> float:
    """Quadrature subtraction sqrt(w^2 - w_ref^2) of a reference linewidth."""
    if width < reference_width:
        raise ValueError("width smaller than reference width")
    return math.sqrt(width**2 - reference_width**2)


# -- attenuation calibration ------------------------------------------------

def _ratio_to_db(ratio: float) -> float:
    return 20.0 * math.log10(ratio) if ratio > 0 else -math.inf


def edsr_attenuation(rabi_slope_khz_per_v: float, stark_slope_khz_per_v: float):
    """Drive-line attenuation from Rabi-vs-amplitude and Stark slopes.

    On resonance the Rabi frequency is half the hyperfine modulation
    amplitude, so the voltage reaching the gate per source volt is
    2 * rabi_slope / stark_slope.  Returns (ratio, dB).
    """
    if stark_slope_khz_per_v == 0:
        raise ValueError("stark slope must be nonzero")
    ratio = 2.0 * rabi_slope_khz_per_v / stark_slope_khz_per_v
    return ratio, _ratio_to_db(ratio)


def set_attenuation(k_mw: float, k_100hz: float):
    """Attenuation from charge-sensor responses to fast vs slow excitation."""
    if k_100hz == 0:
        raise ValueError("low-frequency response must be nonzero")
    ratio = k_mw / k_100hz
    return ratio, _ratio_to_db(ratio)


# -- clustering -------------------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    center: float
    width: float
    count: int


def cluster_frequencies(samples, min_separation: float) -> list:
    """Gap-based 1-D clustering: split sorted samples at gaps above threshold."""
    values = sorted(float(s) for s in samples)
    if not values:
        raise ValueError("samples must be non-empty")
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] > min_separation:
            groups.append([v])
        else:
            groups[-1].append(v)
    out = []
    for g in groups:
        arr = np.array(g)
        out.append(
            Cluster(center=float(arr.mean()), width=float(arr.std()), count=len(g))
        )
    return out

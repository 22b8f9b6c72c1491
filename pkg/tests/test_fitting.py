"""Fit families recover model-generated parameters; calibration arithmetic."""

import math

import numpy as np
import pytest

from flipflopsim.fitting import (
    Cluster,
    Dataset,
    FitError,
    cluster_frequencies,
    damped_sinusoid,
    edsr_attenuation,
    excess_broadening,
    fit_damped_sinusoid,
    fit_gaussian_mixture,
    fit_stretched_exp,
    gaussian_mixture,
    set_attenuation,
    stretched_exp,
)


def _assert_recovers(result, truth, rel=1e-6):
    for name, value in truth.items():
        got = result.params[name]
        if value == 0.0:
            assert abs(got) < 1e-6, name
        else:
            assert abs(got - value) / abs(value) < rel, (name, got, value)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(x=(1.0, 2.0), y=(1.0,))
    with pytest.raises(ValueError):
        Dataset(x=(1.0, 2.0), y=(1.0, 2.0), y_err=(0.1,))
    with pytest.raises(ValueError):
        Dataset(x=(2.0, 1.0), y=(0.0, 0.0)).require_increasing()


def test_stretched_exp_recovery_gaussian_shape():
    # Paper-like Ramsey decay: T2* = 184 us, beta = 2.
    truth = dict(amplitude=0.5, t2=184.0, beta=2.0, offset=0.5)
    t = np.linspace(1.0, 600.0, 80)
    y = stretched_exp(t, **truth)
    result = fit_stretched_exp(Dataset.from_arrays(t, y))
    _assert_recovers(result, truth)


def test_stretched_exp_recovery_subunity_beta():
    # Hahn-like decay with a fractional exponent: T2 = 4.09 us... scaled
    # shape test with beta = 1.28.
    truth = dict(amplitude=0.45, t2=4.09, beta=1.28, offset=0.52)
    t = np.linspace(0.1, 20.0, 60)
    y = stretched_exp(t, **truth)
    result = fit_stretched_exp(Dataset.from_arrays(t, y))
    _assert_recovers(result, truth)


def test_stretched_exp_sigma_accessor():
    t = np.linspace(1.0, 100.0, 40)
    y = stretched_exp(t, 1.0, 30.0, 1.0, 0.0)
    result = fit_stretched_exp(Dataset.from_arrays(t, y, y_err=np.full(40, 0.01)))
    assert result.converged
    assert math.isfinite(result.sigma("t2"))
    d = result.to_dict()
    assert d["model"] == "stretched-exp"


def test_damped_sinusoid_recovery():
    # Ramsey fringe at 118.5 kHz expressed in MHz/us units.
    truth = dict(amplitude=0.48, tau=300.0, frequency=0.1185, phase=0.7, offset=0.5)
    t = np.linspace(0.0, 60.0, 240)
    y = damped_sinusoid(t, **truth)
    result = fit_damped_sinusoid(Dataset.from_arrays(t, y))
    _assert_recovers(result, truth)


def test_damped_sinusoid_needs_two_periods():
    t = np.linspace(0.0, 1.0, 50)
    y = damped_sinusoid(t, 1.0, 100.0, 0.5, 0.0, 0.0)
    with pytest.raises(ValueError, match="2 oscillation periods"):
        fit_damped_sinusoid(Dataset.from_arrays(t, y))


@pytest.mark.parametrize("n_peaks", [1, 2, 3])
def test_gaussian_mixture_recovery(n_peaks):
    means = [-130.0, 0.0, 130.0][:n_peaks]
    params = []
    for m in means:
        params += [1.0 + 0.2 * abs(m) / 130.0, m, 12.0]
    params.append(0.05)
    x = np.linspace(-250.0, 250.0, 400)
    y = gaussian_mixture(x, *params)
    result = fit_gaussian_mixture(Dataset.from_arrays(x, y), n_peaks)
    fitted_means = sorted(result.params[f"mean{k}"] for k in range(n_peaks))
    for got, want in zip(fitted_means, sorted(means)):
        assert abs(got - want) < 1e-4
    assert abs(result.params["baseline"] - 0.05) < 1e-6


def test_gaussian_mixture_degenerate_peaks_raise():
    # Coincident fitted means are reported as a degeneracy error.
    from flipflopsim.fitting import FitResult, _warn_degenerate_peaks

    result = FitResult(
        model="gaussian-2",
        params={"amp0": 1.0, "mean0": 0.0, "sigma0": 2.0,
                "amp1": 0.5, "mean1": 0.05, "sigma1": 2.0, "baseline": 0.0},
        covariance=np.zeros((7, 7)),
        residual_norm=0.0,
        converged=True,
        param_order=("amp0", "mean0", "sigma0", "amp1", "mean1", "sigma1", "baseline"),
    )
    with pytest.raises(FitError, match="degenerate peaks"):
        _warn_degenerate_peaks(result, 2)


def test_gaussian_mixture_rejects_bad_peak_count():
    x = np.linspace(-10.0, 10.0, 200)
    y = gaussian_mixture(x, 1.0, 0.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        fit_gaussian_mixture(Dataset.from_arrays(x, y), 4)


def test_excess_broadening_quadrature():
    assert excess_broadening(5.0, 3.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        excess_broadening(2.0, 3.0)


def test_edsr_attenuation_published_values():
    # Rabi slope ~32 kHz/V at the source, Stark slope 512 kHz/V at the gate.
    ratio, db = edsr_attenuation(32.0, 512.0)
    assert ratio == pytest.approx(0.125)
    assert db == pytest.approx(-18.06, abs=0.01)


def test_set_attenuation_published_values():
    ratio, db = set_attenuation(0.050, 0.46)
    assert db == pytest.approx(-19.28, abs=0.01)
    with pytest.raises(ValueError):
        set_attenuation(1.0, 0.0)


def test_db_round_trip():
    for expected_db in (-18.1, -19.4, -3.0):
        ratio = 10.0 ** (expected_db / 20.0)
        _, db = set_attenuation(ratio, 1.0)
        assert db == pytest.approx(expected_db, abs=1e-9)


def test_cluster_frequencies():
    rng = np.random.default_rng(26)
    centers = [-215.0, -130.0, -45.0, 45.0, 130.0, 215.0]
    samples = np.concatenate([c + rng.normal(0, 2.0, 30) for c in centers])
    clusters = cluster_frequencies(samples, min_separation=40.0)
    assert len(clusters) == 6
    for c, want in zip(clusters, centers):
        assert isinstance(c, Cluster)
        assert abs(c.center - want) < 3.0
        assert c.count == 30
    with pytest.raises(ValueError):
        cluster_frequencies([], 1.0)

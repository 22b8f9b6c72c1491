"""Grid electrostatics, slope prediction and the donor likelihood map."""

import numpy as np
import pytest

from flipflopsim.triangulate import (
    DeviceGeometry,
    Electrode,
    SlopeMeasurement,
    argmax_region,
    likelihood_map,
    predicted_slope,
    predicted_slope_field,
    solve_responses,
)


def _twin_gate_geometry(spacing=4.0):
    """Two mirror-symmetric gates on top, plus a third for triangulation.

    Polygon coverage is half-open ([x0, x1) in grid cells), so the mirror
    image of g1's footprint [8, 28) about x = 40 is [56, 76).
    """
    return DeviceGeometry(
        extent_nm=(80.0, 40.0, 80.0),
        spacing_nm=spacing,
        gates=(
            Electrode("g1", ((8, 28), (28, 28), (28, 52), (8, 52)), (0, 4)),
            Electrode("g2", ((56, 28), (76, 28), (76, 52), (56, 52)), (0, 4)),
            Electrode("g3", ((28, 8), (56, 8), (56, 24), (28, 24)), (0, 4)),
        ),
    )


@pytest.fixture(scope="module")
def twin_solution():
    geometry = _twin_gate_geometry()
    return geometry, solve_responses(geometry)


def test_geometry_validation():
    with pytest.raises(ValueError, match="exceeds the domain"):
        DeviceGeometry(
            extent_nm=(10.0, 10.0, 10.0), spacing_nm=2.0,
            gates=(Electrode("g", ((0, 0), (20, 0), (20, 5)), (0, 2)),),
        )
    with pytest.raises(ValueError):
        Electrode("bad", ((0, 0), (1, 1)), (0, 1))
    with pytest.raises(ValueError):
        Electrode("bad", ((0, 0), (1, 0), (1, 1)), (2, 1))


def test_yaml_layout_round_trip():
    text = """
extent_nm: [40, 20, 40]
spacing_nm: 4
gates:
  - name: g1
    footprint_xz_nm: [[4, 4], [16, 4], [16, 16], [4, 16]]
    y_range_nm: [0, 4]
"""
    geometry = DeviceGeometry.from_yaml(text)
    assert geometry.shape == (11, 6, 11)
    assert geometry.gates[0].name == "g1"
    with pytest.raises(ValueError, match="invalid layout"):
        DeviceGeometry.from_yaml("gates: []")


def test_parallel_plate_linear_profile():
    # A full-width plate at the top vs the grounded bottom face: the center
    # column follows the 1-D analytic solution V(y) = 1 - y/L to 1%.
    plate = Electrode("plate", ((0, 0), (120, 0), (120, 120), (0, 120)), (0, 0))
    geometry = DeviceGeometry(extent_nm=(120.0, 24.0, 120.0), spacing_nm=4.0,
                              gates=(plate,))
    responses = solve_responses(geometry)
    v = responses["plate"].values
    nx, ny, nz = geometry.shape
    column = v[nx // 2, :, nz // 2]
    expected = 1.0 - np.arange(ny) / (ny - 1)
    assert np.abs(column - expected).max() < 0.01


def test_boundary_condition_exact(twin_solution):
    geometry, responses = twin_solution
    from flipflopsim.triangulate import _electrode_mask

    for gate in geometry.gates:
        mask = _electrode_mask(geometry, gate)
        assert (responses[gate.name].values[mask] == 1.0).all()
        for other in geometry.gates:
            if other.name != gate.name:
                other_mask = _electrode_mask(geometry, other)
                assert (responses[gate.name].values[other_mask] == 0.0).all()


def test_residual_below_tolerance(twin_solution):
    _, responses = twin_solution
    for r in responses.values():
        assert r.residual < 1e-6


def test_superposition(twin_solution):
    # Laplace is linear: driving g1 and g2 at 1 V together equals the sum of
    # their unit responses.
    from flipflopsim.triangulate import _electrode_mask, _sor_solve

    geometry, responses = twin_solution
    masks = {g.name: _electrode_mask(geometry, g) for g in geometry.gates}
    all_conductors = np.zeros(geometry.shape, dtype=bool)
    for m in masks.values():
        all_conductors |= m
    both = _sor_solve(masks["g1"] | masks["g2"], all_conductors, geometry.shape,
                      1e-8, 100000)
    v_sum = responses["g1"].values + responses["g2"].values
    assert np.abs(both - v_sum).max() < 1e-5


def test_twin_gate_mirror_symmetry(twin_solution):
    geometry, responses = twin_solution
    # g2 is g1 mirrored about the x midplane, so their responses mirror too.
    assert np.allclose(
        responses["g1"].values, responses["g2"].values[::-1, :, :], atol=1e-5
    )


def test_midpoint_slope_is_minus_one(twin_solution):
    geometry, responses = twin_solution
    nx, ny, nz = geometry.shape
    mid = (nx // 2, ny // 2, nz // 2)
    s = predicted_slope(responses, ("g1", "g2"), mid)
    assert s == pytest.approx(-1.0, abs=1e-6)


def test_slope_near_dominant_gate(twin_solution):
    geometry, responses = twin_solution
    # Adjacent to g1, far from g2: |s| = |R_g2 / R_g1| is well below 1.
    idx = (4, 2, 10)
    s = predicted_slope(responses, ("g1", "g2"), idx)
    assert abs(s) < 0.3


def test_sigma_formula_limits():
    assert SlopeMeasurement(("a", "b"), 1.0).sigma == pytest.approx(2.0)
    assert SlopeMeasurement(("a", "b"), 1e6).sigma == pytest.approx(1.0, rel=1e-9)


def test_plant_and_recover_zero_noise(twin_solution):
    geometry, responses = twin_solution
    planted = (geometry.shape[0] // 3, geometry.shape[1] // 2, geometry.shape[2] // 2)
    pairs = [("g1", "g2"), ("g1", "g3"), ("g2", "g3")]
    measurements = [
        SlopeMeasurement(pair, float(predicted_slope_field(responses, pair)[planted]))
        for pair in pairs
    ]
    p = likelihood_map(measurements, responses)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    peak = np.unravel_index(np.argmax(p), p.shape)
    assert max(abs(a - b) for a, b in zip(peak, planted)) <= 2
    # Exact measurements: the planted cell is the global maximum.
    assert p[planted] == p.max()


def test_likelihood_requires_two_pairs(twin_solution):
    _, responses = twin_solution
    with pytest.raises(ValueError, match="at least 2"):
        likelihood_map([SlopeMeasurement(("g1", "g2"), -1.0)], responses)


def test_likelihood_prior_mask(twin_solution):
    geometry, responses = twin_solution
    measurements = [
        SlopeMeasurement(("g1", "g2"), -1.0),
        SlopeMeasurement(("g1", "g3"), -1.0),
    ]
    mask = np.zeros(geometry.shape, dtype=bool)
    mask[:, 3:5, :] = True
    p = likelihood_map(measurements, responses, mask)
    assert p[:, :3, :].sum() == 0.0
    assert p.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError, match="vanished"):
        likelihood_map(measurements, responses, np.zeros(geometry.shape, dtype=bool))


def test_redundant_pair_leaves_argmax(twin_solution):
    # Adding a measurement that matches the simulation everywhere it matters
    # must not move the peak.
    geometry, responses = twin_solution
    planted = (geometry.shape[0] // 3, geometry.shape[1] // 2, geometry.shape[2] // 2)
    pairs = [("g1", "g2"), ("g1", "g3")]
    measurements = [
        SlopeMeasurement(pair, float(predicted_slope_field(responses, pair)[planted]))
        for pair in pairs
    ]
    p1 = likelihood_map(measurements, responses)
    extra = SlopeMeasurement(
        ("g2", "g3"), float(predicted_slope_field(responses, ("g2", "g3"))[planted])
    )
    p2 = likelihood_map(measurements + [extra], responses)
    assert np.unravel_index(np.argmax(p1), p1.shape) == np.unravel_index(
        np.argmax(p2), p2.shape
    )


def test_weighting_prefers_large_slopes(twin_solution):
    # Perturbing a large-|s| measurement (sigma near 1) moves the peak
    # more than the same perturbation on a small-|s| one (sigma large).
    geometry, responses = twin_solution
    planted = (geometry.shape[0] // 3, geometry.shape[1] // 2, geometry.shape[2] // 2)
    pairs = [("g1", "g2"), ("g1", "g3"), ("g2", "g3")]
    slopes = {p: float(predicted_slope_field(responses, p)[planted]) for p in pairs}
    big = max(pairs, key=lambda p: abs(slopes[p]))
    small = min(pairs, key=lambda p: abs(slopes[p]))

    def peak_displacement(perturbed_pair):
        ms = [
            SlopeMeasurement(
                p, slopes[p] * (1.3 if p == perturbed_pair else 1.0)
            )
            for p in pairs
        ]
        p_map = likelihood_map(ms, responses)
        peak = np.unravel_index(np.argmax(p_map), p_map.shape)
        return sum(abs(a - b) for a, b in zip(peak, planted))

    # The large-slope perturbation moves the peak; the small one does not.
    assert peak_displacement(big) > peak_displacement(small)


def test_argmax_region_limits():
    delta = np.zeros((4, 4, 4))
    delta[1, 2, 3] = 1.0
    region = argmax_region(delta, mass=0.9)
    assert region.argmax_index == (1, 2, 3)
    assert len(region.cells) == 1
    uniform = np.full((4, 4, 4), 1.0 / 64.0)
    region = argmax_region(uniform, mass=1.0)
    assert len(region.cells) == 64
    with pytest.raises(ValueError):
        argmax_region(np.full((2, 2, 2), 1.0))  # not normalized
    with pytest.raises(ValueError):
        argmax_region(delta, mass=0.0)

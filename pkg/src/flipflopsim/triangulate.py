"""Donor triangulation: grid electrostatics, slope prediction, likelihood map.

A finite-difference Laplace solver (red-black successive over-relaxation on
a regular 3-D grid) computes each gate's unit potential response
dV(r)/dV_gate with all other conductors grounded.  Measured transition
slopes between gate pairs are then compared against the predicted slopes
over the grid, giving a normalized likelihood map for the donor position.

Geometry is loaded from a YAML layout (schema in docs/layout_schema.md):
axes are x (lateral), y (depth, 0 at the surface) and z (lateral), all in
nm; electrodes are prisms given by a polygon footprint in the x-z plane
and a y range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml


class SolverError(RuntimeError):
    """The iterative solver failed to reach the residual target."""


@dataclass(frozen=True)
class Electrode:
    name: str
    polygon_xz_nm: tuple      # ((x0,z0), (x1,z1), ...) footprint vertices
    y_range_nm: tuple         # (y_min, y_max)

    def __post_init__(self):
        if len(self.polygon_xz_nm) < 3:
            raise ValueError(f"electrode {self.name}: footprint needs >= 3 vertices")
        if self.y_range_nm[1] < self.y_range_nm[0]:
            raise ValueError(f"electrode {self.name}: empty y range")


@dataclass(frozen=True)
class DeviceGeometry:
    extent_nm: tuple          # (Lx, Ly, Lz)
    spacing_nm: float
    gates: tuple              # Electrodes driven one at a time
    grounds: tuple = ()       # always-grounded conductors (e.g. electron layer)

    def __post_init__(self):
        if self.spacing_nm <= 0:
            raise ValueError("grid spacing must be > 0")
        for e in self.gates + self.grounds:
            xs = [p[0] for p in e.polygon_xz_nm]
            zs = [p[1] for p in e.polygon_xz_nm]
            if (
                min(xs) < 0 or max(xs) > self.extent_nm[0]
                or min(zs) < 0 or max(zs) > self.extent_nm[2]
                or e.y_range_nm[0] < 0 or e.y_range_nm[1] > self.extent_nm[1]
            ):
                raise ValueError(f"electrode {e.name} exceeds the domain")

    @property
    def shape(self) -> tuple:
        return tuple(int(round(l / self.spacing_nm)) + 1 for l in self.extent_nm)

    def axes_nm(self) -> tuple:
        return tuple(np.arange(n) * self.spacing_nm for n in self.shape)

    @classmethod
    def from_yaml(cls, text: str) -> "DeviceGeometry":
        doc = yaml.safe_load(text)
        try:
            gates = tuple(_electrode_from_dict(d) for d in doc["gates"])
            grounds = tuple(_electrode_from_dict(d) for d in doc.get("grounds", []))
            return cls(
                extent_nm=tuple(float(v) for v in doc["extent_nm"]),
                spacing_nm=float(doc["spacing_nm"]),
                gates=gates,
                grounds=grounds,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid layout document: {exc}") from exc


def _electrode_from_dict(d: dict) -> Electrode:
    return Electrode(
        name=str(d["name"]),
        polygon_xz_nm=tuple((float(p[0]), float(p[1])) for p in d["footprint_xz_nm"]),
        y_range_nm=tuple(float(v) for v in d["y_range_nm"]),
    )


def _points_in_polygon(px: np.ndarray, pz: np.ndarray, polygon) -> np.ndarray:
    """Even-odd-rule point-in-polygon test, vectorized over points."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x0, z0 = polygon[i]
        x1, z1 = polygon[(i + 1) % n]
        crosses = (pz < z0) != (pz < z1)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x0 + (pz - z0) / (z1 - z0) * (x1 - x0)
        inside ^= crosses & (px < x_cross)
    return inside


def _electrode_mask(geometry: DeviceGeometry, electrode: Electrode) -> np.ndarray:
    ax_x, ax_y, ax_z = geometry.axes_nm()
    eps = 1e-9 * max(geometry.extent_nm)
    ymask = (ax_y >= electrode.y_range_nm[0] - eps) & (ax_y <= electrode.y_range_nm[1] + eps)
    gx, gz = np.meshgrid(ax_x, ax_z, indexing="ij")
    # Nudge sample points so polygon edges land inside, not on, the boundary.
    fp = _points_in_polygon(gx + eps, gz + eps, electrode.polygon_xz_nm)
    mask = np.zeros(geometry.shape, dtype=bool)
    mask[:, ymask, :] = fp[:, None, :]
    return mask


@dataclass(frozen=True)
class PotentialResponse:
    """Unit response field dV(r)/dV_gate over the grid for one gate."""

    gate: str
    values: np.ndarray
    residual: float


def solve_responses(
    geometry: DeviceGeometry,
    tolerance: float = 1e-6,
    max_iterations: int = 100000,
) -> dict:
    """Solve Laplace's equation once per gate (unit potential, others grounded).

    Red-black SOR with the model-problem optimal relaxation factor; the
    domain boundary is held at zero (grounded enclosure).  Returns a dict
    gate name -> PotentialResponse; raises SolverError on non-convergence.
    """
    gate_masks = {g.name: _electrode_mask(geometry, g) for g in geometry.gates}
    ground = np.zeros(geometry.shape, dtype=bool)
    for g in geometry.grounds:
        ground |= _electrode_mask(geometry, g)
    all_conductors = ground.copy()
    for m in gate_masks.values():
        all_conductors |= m

    responses = {}
    for name, drive_mask in gate_masks.items():
        values = _sor_solve(
            drive_mask, all_conductors, geometry.shape, tolerance, max_iterations
        )
        residual = _laplace_residual(values, all_conductors)
        responses[name] = PotentialResponse(gate=name, values=values, residual=residual)
    return responses


def _sor_solve(drive_mask, conductors, shape, tolerance, max_iterations):
    v = np.zeros(shape)
    v[drive_mask] = 1.0
    fixed = conductors.copy()
    fixed[0, :, :] = fixed[-1, :, :] = True
    fixed[:, 0, :] = fixed[:, -1, :] = True
    fixed[:, :, 0] = fixed[:, :, -1] = True
    free = ~fixed
    ii, jj, kk = np.indices(shape)
    parity = (ii + jj + kk) % 2
    masks = [free & (parity == 0), free & (parity == 1)]
    omega = 2.0 / (1.0 + math.sin(math.pi / max(shape)))
    for it in range(max_iterations):
        for mask in masks:
            neighbors = np.zeros(shape)
            neighbors[1:-1, :, :] = v[2:, :, :] + v[:-2, :, :]
            neighbors[:, 1:-1, :] += v[:, 2:, :] + v[:, :-2, :]
            neighbors[:, :, 1:-1] += v[:, :, 2:] + v[:, :, :-2]
            update = neighbors / 6.0 - v
            v[mask] += omega * update[mask]
        if it % 20 == 19 or it == max_iterations - 1:
            if _laplace_residual(v, fixed) < tolerance:
                return v
    raise SolverError(
        f"SOR did not reach residual {tolerance} in {max_iterations} iterations"
    )


def _laplace_residual(v, fixed) -> float:
    """Relative discrete Laplace residual over interior free nodes."""
    interior = ~fixed
    interior[0, :, :] = interior[-1, :, :] = False
    interior[:, 0, :] = interior[:, -1, :] = False
    interior[:, :, 0] = interior[:, :, -1] = False
    lap = (
        v[2:, 1:-1, 1:-1] + v[:-2, 1:-1, 1:-1]
        + v[1:-1, 2:, 1:-1] + v[1:-1, :-2, 1:-1]
        + v[1:-1, 1:-1, 2:] + v[1:-1, 1:-1, :-2]
        - 6.0 * v[1:-1, 1:-1, 1:-1]
    )
    r = lap[interior[1:-1, 1:-1, 1:-1]]
    scale = max(float(np.abs(v).max()), 1e-30)
    return float(np.abs(r).max()) / (6.0 * scale) if r.size else 0.0


@dataclass(frozen=True)
class SlopeMeasurement:
    """Measured transition slope for a (swept, reference) gate pair."""

    gate_pair: tuple
    slope: float

    @property
    def sigma(self) -> float:
        """Heuristic slope uncertainty 1 + 1/s^2 (steeper slopes weigh more)."""
        return 1.0 + 1.0 / self.slope**2


def predicted_slope_field(responses: dict, pair) -> np.ndarray:
    """Predicted slope -R_g2 / R_g1 over the whole grid for one gate pair."""
    swept, reference = pair
    r1 = responses[swept].values
    r2 = responses[reference].values
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -r2 / r1
    return s


def predicted_slope(responses: dict, pair, index) -> float:
    """Predicted slope at one grid cell; rejects fully screened points."""
    s = predicted_slope_field(responses, pair)[tuple(index)]
    if not np.isfinite(s):
        raise ZeroDivisionError(
            f"swept-gate response vanishes at grid cell {tuple(index)}"
        )
    return float(s)


def likelihood_map(
    measurements,
    responses: dict,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Normalized donor-position likelihood over the grid.

    P(r) proportional to exp(-1/2 sum_g ((s_sim(r) - s_g) / sigma_g)^2),
    with sigma_g from the measured slope.  Cells where any swept-gate
    response vanishes (fully screened) get zero probability, as do cells
    excluded by the optional prior ``mask``.
    """
    measurements = list(measurements)
    if len(measurements) < 2:
        raise ValueError("need at least 2 independent gate-pair measurements")
    shape = next(iter(responses.values())).values.shape
    chi2 = np.zeros(shape)
    valid = np.ones(shape, dtype=bool)
    for m in measurements:
        s_sim = predicted_slope_field(responses, m.gate_pair)
        finite = np.isfinite(s_sim)
        valid &= finite
        term = np.where(finite, (s_sim - m.slope) / m.sigma, 0.0)
        chi2 += term**2
    if mask is not None:
        valid &= mask.astype(bool)
    if not valid.any():
        raise ValueError("likelihood vanished everywhere (empty prior mask?)")
    log_p = np.where(valid, -0.5 * chi2, -np.inf)
    log_p -= log_p[valid].max()
    p = np.where(valid, np.exp(log_p), 0.0)
    total = p.sum()
    if total == 0:
        raise ValueError("likelihood vanished everywhere (empty prior mask?)")
    return p / total


@dataclass(frozen=True)
class CredibleRegion:
    argmax_index: tuple
    cells: tuple              # flat indices of the smallest set holding >= mass
    mass: float
    axis_intervals: tuple     # per-axis (min_index, max_index) of the region


def argmax_region(p: np.ndarray, mass: float = 0.9) -> CredibleRegion:
    """Maximizer and the smallest cell set holding at least ``mass``."""
    if not 0.0 < mass <= 1.0:
        raise ValueError("mass must lie in (0, 1]")
    flat = p.ravel()
    if abs(flat.sum() - 1.0) > 1e-6:
        raise ValueError("probability field is not normalized")
    order = np.argsort(flat)[::-1]
    cum = np.cumsum(flat[order])
    n_cells = int(np.searchsorted(cum, mass - 1e-12) + 1)
    cells = order[:n_cells]
    coords = np.unravel_index(cells, p.shape)
    intervals = tuple((int(c.min()), int(c.max())) for c in coords)
    return CredibleRegion(
        argmax_index=tuple(int(c) for c in np.unravel_index(order[0], p.shape)),
        cells=tuple(int(c) for c in cells),
        mass=float(cum[n_cells - 1]),
        axis_intervals=intervals,
    )

"""Perturbative energy corrections of trapped states from the surface potential.

The leading correction to the state of well n is the expectation value
of the (regularized) atom-surface potential on the unperturbed state,

    dE_n = int_0^inf |psi_n(z)|^2 V_reg(z) dz,

evaluated by mesh quadrature with the potential interpolated onto the
eigenstate mesh: eigenvectors are the scarce, expensive object, the
table is resampled.  Since psi vanishes linearly at the wall and the
regularized potential grows no faster than z^-1 there, the integrand
stays integrable by construction.

The well-center estimate (point potential evaluated at z = n) is kept
alongside as the simple first guess the averages are compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .constants import LatticeUnits, to_hz
from .errors import ValidationError
from . import casimir, finite_size, lattice

__all__ = [
    "CorrectionRow",
    "energy_correction",
    "well_center_estimate",
    "correction_table",
    "well_center_comparison",
    "trap_regularization_shift",
]


@dataclass(frozen=True)
class CorrectionRow:
    """One corrected well: signed shift in Hz plus the model that produced it."""

    well: int
    delta_e_hz: float
    delta_e_recoil: float
    radius: float
    profile: str
    surface: str


def energy_correction(state: lattice.EigenState, v_reg, units: LatticeUnits) -> tuple:
    """Expectation value of a regularized potential on one state.

    v_reg is a PotentialTable (or any callable z -> E_r) covering the
    state's mesh; more than 1e-8 of probability outside the covered
    range is an error.  Returns (E_r, Hz), sign preserved.
    """
    mesh = state.mesh
    z = mesh.points
    density = state.wavefunction ** 2 * mesh.spacing
    if isinstance(v_reg, casimir.PotentialTable):
        inside = (z >= v_reg.z_min) & (z <= v_reg.z_max)
        outside_mass = float(np.sum(density[~inside]))
        if outside_mass > 1e-8:
            raise ValidationError(
                f"{outside_mass:.2e} probability mass outside the table range")
        values = np.zeros_like(z)
        values[inside] = v_reg(z[inside])
    else:
        values = np.asarray(v_reg(z), dtype=float)
    delta = float(np.dot(density, values))
    return delta, to_hz(delta, units)


def well_center_estimate(v_point, n: int, units: LatticeUnits) -> float:
    """Point potential at the center of well n, in Hz."""
    if n < 1:
        raise ValidationError("well index must be >= 1")
    return to_hz(float(v_point(float(n))), units)


def trap_regularization_shift(state: lattice.EigenState, config: lattice.LatticeConfig,
                              profile: finite_size.DensityProfile,
                              units: LatticeUnits) -> float:
    """Shift (E_r) from smearing the trap and gravity terms over the atom.

    Applying the same finite-size average to delta_g z + (U/2)(1 - cos
    2 pi z) changes it by delta_g <u> plus a contrast reduction of the
    cosine; the expectation of the difference on the state is returned.
    Small (relative 1e-3 or below) whenever R is far below the period.
    """
    mean_u, cos_f, sin_f = finite_size.trap_smearing_factor(profile, units)
    z = state.mesh.points
    density = state.wavefunction ** 2 * state.mesh.spacing
    phase = 2.0 * math.pi * z
    # smeared cosine: int w(u) cos(2 pi (z+u)) du = cos_f cos - sin_f sin
    dv = (config.gravity_step * mean_u
          + 0.5 * config.depth * (np.cos(phase) - (cos_f * np.cos(phase) - sin_f * np.sin(phase))))
    return float(np.dot(density, dv))


def _correction_grid(config: lattice.LatticeConfig, headroom: float) -> casimir.GridSpec:
    """Tabulation grid covering the eigenstate mesh plus regularization headroom."""
    z_lo = 0.45 * config.spacing
    return casimir.GridSpec(z_lo, config.z_max + headroom, num=420)


def build_point_table(config: lattice.LatticeConfig, atom, surface, units,
                      max_radius: float = finite_size.RADIUS_LARGE) -> casimir.PotentialTable:
    """Point-atom potential tabulated over the whole solver mesh."""
    headroom = 2.0 * max_radius / units.length_unit

    if surface.temperature > 0:
        def v(z):
            return casimir.vcp_finite_temperature(z, atom, surface, surface.temperature, units)
    else:
        def v(z):
            return casimir.vcp_zero_temperature(z, atom, surface, units)

    return casimir.build_potential_table(v, _correction_grid(config, headroom),
                                         label=f"cp:{surface.label}")


def correction_table(config: lattice.LatticeConfig, atom, surface,
                     radii: Sequence[float], profiles: Sequence[str],
                     units: LatticeUnits, wells: int = 12,
                     states: Sequence[lattice.EigenState] | None = None,
                     point_table: casimir.PotentialTable | None = None,
                     regularize_trap: bool = False) -> list:
    """Corrections for wells 1..wells over the radius/profile cross product.

    Rows are ordered by (well, radius, profile).  Pass precomputed
    states or a point table to reuse expensive pieces across calls.
    """
    if states is None:
        states = lattice.solve_band(config, count=wells + 4)
    band = {s.well_index: s for s in lattice.first_band(states)}
    missing = [n for n in range(1, wells + 1) if n not in band]
    if missing:
        raise ValidationError(f"missing wells {missing}")
    if point_table is None:
        point_table = build_point_table(config, atom, surface, units,
                                        max_radius=max(radii))

    reg_tables = {
        (radius, kind): finite_size.regularize_table(
            point_table, finite_size.DensityProfile(kind, radius), units)
        for radius in radii for kind in profiles
    }

    rows = []
    for n in range(1, wells + 1):
        state = band[n]
        for radius in radii:
            for kind in profiles:
                delta, delta_hz = energy_correction(state, reg_tables[radius, kind], units)
                if regularize_trap:
                    profile = finite_size.DensityProfile(kind, radius)
                    delta += trap_regularization_shift(state, config, profile, units)
                    delta_hz = to_hz(delta, units)
                rows.append(CorrectionRow(
                    well=n, delta_e_hz=delta_hz, delta_e_recoil=delta,
                    radius=radius, profile=kind, surface=surface.label))
    return rows


def well_center_comparison(rows: Sequence[CorrectionRow],
                           point_table: casimir.PotentialTable,
                           units: LatticeUnits,
                           radius: float = finite_size.RADIUS_SMALL,
                           profile: str = "uniform") -> list:
    """(well, correction_hz, well_center_hz, ratio |dE| / |V(n)|) rows."""
    out = []
    for row in rows:
        if not (math.isclose(row.radius, radius) and row.profile == profile):
            continue
        center = well_center_estimate(point_table, row.well, units)
        out.append((row.well, row.delta_e_hz, center,
                    abs(row.delta_e_hz) / abs(center)))
    return out

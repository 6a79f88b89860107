"""Physical constants, species data, and lattice units.

Every other module works in the dimensionless trap units defined here:
energies in units of the photon recoil energy E_r = hbar^2 k_l^2 / (2 m)
and lengths in units of the lattice period lambda_l / 2.  A single
LatticeUnits instance is built once per (species, wavelength) pair and
passed around; no downstream module re-derives constants.

All value types are frozen dataclasses and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError

__all__ = [
    "PhysicalConstants",
    "SpeciesData",
    "LatticeUnits",
    "DEFAULT_CONSTANTS",
    "RB87",
    "RB85",
    "DEFAULT_WAVELENGTH",
    "make_units",
    "to_hz",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used throughout (CODATA values; g is configurable).

    The default g of 9.81 m/s^2 reproduces the reference tilt
    delta_g = 0.070068 for Rb87 in a 532 nm lattice to 4e-6 relative.
    """

    hbar: float = 1.054571817e-34      # J s
    c: float = 299792458.0             # m / s
    k_B: float = 1.380649e-23          # J / K
    G: float = 6.67430e-11             # m^3 kg^-1 s^-2
    epsilon0: float = 8.8541878128e-12  # F / m
    g_earth: float = 9.81              # m / s^2

    def __post_init__(self):
        for name in ("hbar", "c", "k_B", "G", "epsilon0", "g_earth"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"constant {name} must be positive")

    @property
    def h(self) -> float:
        """Planck constant, 2*pi*hbar by construction."""
        return 2.0 * math.pi * self.hbar

    def with_overrides(self, **kwargs) -> "PhysicalConstants":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SpeciesData:
    """One atomic species: label, mass, and which polarizability data to use."""

    name: str
    mass: float  # kg
    polarizability_ref: str = "Rb"

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValidationError("species mass must be positive")


DEFAULT_CONSTANTS = PhysicalConstants()

# Isotope masses from the standard atomic-mass tables (u times 1.66053906660e-27 kg).
RB87 = SpeciesData("Rb87", 1.4431609e-25)
RB85 = SpeciesData("Rb85", 1.4099934e-25)

DEFAULT_WAVELENGTH = 532e-9  # m, trapping laser


@dataclass(frozen=True)
class LatticeUnits:
    """Dimensionless unit system of one trapped species.

    recoil_energy is E_r in joules, length_unit is one lattice period
    lambda_l / 2 in meters, and gravity_step is the dimensionless energy
    offset delta_g = m g (lambda_l/2) / E_r between neighbouring wells.
    """

    lambda_l: float       # m
    recoil_energy: float  # J
    length_unit: float    # m
    gravity_step: float   # dimensionless
    species: SpeciesData
    constants: PhysicalConstants

    def __post_init__(self):
        if not (self.lambda_l > 0 and self.recoil_energy > 0
                and self.length_unit > 0 and self.gravity_step > 0):
            raise ValidationError("lattice units must be positive")


def make_units(species: SpeciesData,
               lambda_l: float = DEFAULT_WAVELENGTH,
               constants: PhysicalConstants = DEFAULT_CONSTANTS) -> LatticeUnits:
    """Build the unit system for one species in a lattice of wavelength lambda_l."""
    if not lambda_l > 0:
        raise ValidationError("lambda_l must be positive")
    if not species.mass > 0:
        raise ValidationError("species mass must be positive")
    k_l = 2.0 * math.pi / lambda_l
    recoil = constants.hbar ** 2 * k_l ** 2 / (2.0 * species.mass)
    length = lambda_l / 2.0
    gravity_step = species.mass * constants.g_earth * length / recoil
    return LatticeUnits(
        lambda_l=lambda_l,
        recoil_energy=recoil,
        length_unit=length,
        gravity_step=gravity_step,
        species=species,
        constants=constants,
    )


def to_hz(energy: float, units: LatticeUnits) -> float:
    """Convert an energy in recoil units to a frequency in Hz."""
    return energy * units.recoil_energy / units.constants.h

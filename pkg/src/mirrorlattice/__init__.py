"""Trapped-atom states near a mirror: spectra, surface-force corrections,
and short-range gravity constraints, all in lattice recoil units."""

__version__ = "0.1.0"

from .constants import (DEFAULT_CONSTANTS, DEFAULT_WAVELENGTH, RB85, RB87,
                        LatticeUnits, PhysicalConstants, SpeciesData,
                        make_units, to_hz)
from .lattice import (EigenState, LatticeConfig, Mesh, SpectrumTable,
                      assemble_hamiltonian, energy_differences, first_band,
                      label_wells, lattice_potential, reference_ws_state,
                      solve_band, solve_energies)
from .casimir import (DrudeModel, GridSpec, LorentzOscillators,
                      PerfectConductor, PolarizabilityModel, PotentialTable,
                      SurfaceModel, TabulatedPermittivity, alpha_imaginary,
                      build_potential_table, bundled_rubidium, fresnel,
                      power_law_exponent, vcp_finite_temperature, vcp_vdw,
                      vcp_zero_temperature)
from .finite_size import (RADIUS_LARGE, RADIUS_SMALL, AxialWeight,
                          DensityProfile, axial_weight, regularize,
                          regularize_table)
from .corrections import (CorrectionRow, correction_table, energy_correction,
                          well_center_comparison, well_center_estimate)
from .yukawa import (DifferentialRow, ExclusionCurve, YukawaParams,
                     exclusion_curve, isotope_differential,
                     newtonian_well_shift_bound, spectrum_with_yukawa,
                     yukawa_potential)
from .errors import (CacheCorruptionError, ConfigError, ConvergenceError,
                     ValidationError)

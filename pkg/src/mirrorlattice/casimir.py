"""Atom-surface dispersion potential for pluggable atom and mirror models.

The zero-temperature potential of an atom at distance z from a planar
mirror is the double integral

    V(z) = (hbar / pi c^2) int dxi xi^2 [alpha(i xi)/(4 pi eps0)]
           int dk (k e^{-2Kz} / 2K) [ r_TE - (1 + 2 c^2 k^2 / xi^2) r_TM ],

with K = sqrt(xi^2/c^2 + k^2) and r_TE/r_TM the Fresnel coefficients of
the mirror evaluated at imaginary frequency.  At temperature T > 0 the
xi integral becomes a sum over Matsubara frequencies xi_n = 2 pi n k_B T
/ hbar with the n = 0 term at half weight.  For a perfectly conducting
mirror the k integral is elementary and the potential reduces to a
single integral, which doubles as an independent cross-check of the
general two-dimensional route.

All evaluation is done in SI units internally; lattice units enter only
at the interface, where distances are given in lattice periods and
energies returned in recoil units.  Functions here are pure and safe to
call from multiple threads; summation orders are fixed so results are
reproducible bit for bit.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import DEFAULT_CONSTANTS, LatticeUnits, PhysicalConstants
from .errors import ConvergenceError, ValidationError
from .quadrature import gauss_laguerre, integrate_semi_infinite

__all__ = [
    "PolarizabilityModel",
    "PerfectConductor",
    "DrudeModel",
    "LorentzOscillators",
    "TabulatedPermittivity",
    "SurfaceModel",
    "PotentialTable",
    "GridSpec",
    "alpha_imaginary",
    "fresnel",
    "vcp_zero_temperature",
    "vcp_finite_temperature",
    "vcp_vdw",
    "power_law_exponent",
    "build_potential_table",
    "bundled_rubidium",
    "bundled_data_checksum",
]

_EV = 1.602176634e-19          # J
_E_A0 = 1.602176634e-19 * 5.29177210903e-11  # C m, dipole atomic unit
_LAGUERRE_ORDER = 96


# ---------------------------------------------------------------------------
# atomic polarizability

@dataclass(frozen=True)
class PolarizabilityModel:
    """Ground-state dynamic polarizability from a dipole transition table.

    transition_energies are E_n in joules and dipole_sq the squared
    dipole matrix elements mu_n^2 in C^2 m^2; the polarizability on the
    imaginary axis is

        alpha(i xi) = (2/3) sum_n E_n mu_n^2 / (E_n^2 + hbar^2 xi^2),

    positive and monotonically decreasing in xi.
    """

    transition_energies: np.ndarray
    dipole_sq: np.ndarray
    label: str = ""
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        e = np.asarray(self.transition_energies, dtype=float)
        m = np.asarray(self.dipole_sq, dtype=float)
        if e.size == 0:
            raise ValidationError("transition table is empty")
        if e.shape != m.shape:
            raise ValidationError("transition table columns differ in length")
        if np.any(e <= 0) or np.any(m < 0):
            raise ValidationError("transition energies must be > 0 and mu^2 >= 0")
        object.__setattr__(self, "transition_energies", e)
        object.__setattr__(self, "dipole_sq", m)

    def alpha(self, xi):
        """alpha(i xi) in SI units C^2 m^2 / J; xi in rad/s, scalar or array."""
        xi = np.asarray(xi, dtype=float)
        e = self.transition_energies
        m = self.dipole_sq
        hx = (self.constants.hbar * xi) ** 2
        terms = e * m / (e ** 2 + hx[..., None])
        return (2.0 / 3.0) * np.sum(terms, axis=-1)

    @property
    def static_alpha_over_4pieps0(self) -> float:
        """alpha(0) / (4 pi eps0) in m^3."""
        return float(self.alpha(0.0)) / (4.0 * math.pi * self.constants.epsilon0)

    @property
    def dipole_sq_sum_over_4pieps0(self) -> float:
        """sum_n mu_n^2 / (4 pi eps0) in J m^3; fixes the van der Waals limit."""
        return float(np.sum(self.dipole_sq)) / (4.0 * math.pi * self.constants.epsilon0)

    @classmethod
    def from_file(cls, path, label="", constants=DEFAULT_CONSTANTS):
        """Load a columnar (energy, mu^2) table.

        The header must contain a line '# units: <energy> <dipole^2>'
        with energy one of eV|J and dipole^2 one of (e*a0)^2|C^2m^2.
        """
        energy_unit = dipole_unit = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    if line.lower().startswith("# units:"):
                        parts = line.split(":", 1)[1].split()
                        if len(parts) != 2:
                            raise ValidationError("malformed units header")
                        energy_unit, dipole_unit = parts
                    continue
                if line:
                    rows.append([float(tok) for tok in line.split()])
        if energy_unit is None:
            raise ValidationError("transition file lacks a units header")
        if energy_unit not in ("eV", "J") or dipole_unit not in ("(e*a0)^2", "C^2m^2"):
            raise ValidationError(f"unsupported units {energy_unit} {dipole_unit}")
        data = np.asarray(rows, dtype=float)
        energies = data[:, 0] * (_EV if energy_unit == "eV" else 1.0)
        dip = data[:, 1] * (_E_A0 ** 2 if dipole_unit == "(e*a0)^2" else 1.0)
        return cls(energies, dip, label=label, constants=constants)


_BUNDLED_NAME = "rb_polarizability.txt"


def _bundled_path():
    return resources.files("mirrorlattice.data").joinpath(_BUNDLED_NAME)


def bundled_rubidium(constants: PhysicalConstants = DEFAULT_CONSTANTS) -> PolarizabilityModel:
    """The packaged rubidium transition table."""
    with resources.as_file(_bundled_path()) as path:
        return PolarizabilityModel.from_file(path, label="Rb", constants=constants)


def bundled_data_checksum() -> str:
    return hashlib.sha256(_bundled_path().read_bytes()).hexdigest()


def alpha_imaginary(model: PolarizabilityModel, xi: float) -> float:
    """alpha(i xi) in SI units; xi must be >= 0."""
    if np.any(np.asarray(xi) < 0):
        raise ValidationError("imaginary frequency must be >= 0")
    return model.alpha(xi)


# ---------------------------------------------------------------------------
# mirror permittivity models

@dataclass(frozen=True)
class PerfectConductor:
    """Ideal mirror: r_TE = -1 and r_TM = +1 for all (k, xi)."""


@dataclass(frozen=True)
class DrudeModel:
    """eps(i xi) = 1 + omega_p^2 / (xi (xi + gamma)), frequencies in rad/s."""

    plasma_frequency: float
    relaxation_rate: float

    def __post_init__(self):
        if self.plasma_frequency <= 0 or self.relaxation_rate <= 0:
            raise ValidationError("Drude parameters must be positive")

    def eps_imag(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 1.0 + self.plasma_frequency ** 2 / (xi * (xi + self.relaxation_rate))

    def static_eps(self) -> float:
        return math.inf


@dataclass(frozen=True)
class LorentzOscillators:
    """eps(i xi) = 1 + sum_j wp_j^2 / (w_j^2 + gamma_j xi + xi^2)."""

    oscillators: tuple  # of (plasma, resonance, damping) in rad/s

    def __post_init__(self):
        osc = tuple(tuple(map(float, o)) for o in self.oscillators)
        if not osc:
            raise ValidationError("need at least one oscillator")
        for wp, w0, g in osc:
            if wp <= 0 or w0 <= 0 or g < 0:
                raise ValidationError("oscillator parameters out of range")
        object.__setattr__(self, "oscillators", osc)

    def eps_imag(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.ones_like(xi)
        for wp, w0, g in self.oscillators:
            out = out + wp ** 2 / (w0 ** 2 + g * xi + xi ** 2)
        return out

    def static_eps(self) -> float:
        return float(self.eps_imag(0.0))


@dataclass(frozen=True)
class TabulatedPermittivity:
    """eps(i xi) sampled on a grid of imaginary frequencies (rad/s).

    Interpolated as log(eps - 1) against log(xi), clamped flat outside
    the grid; the first sample stands in for the static value.
    """

    xi_grid: np.ndarray
    eps_values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.xi_grid, dtype=float)
        e = np.asarray(self.eps_values, dtype=float)
        if x.ndim != 1 or x.shape != e.shape or len(x) < 2:
            raise ValidationError("tabulated permittivity needs matching 1-d arrays")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("xi grid must be strictly increasing")
        if np.any(e < 1.0):
            raise ValidationError("eps(i xi) must be >= 1 everywhere")
        object.__setattr__(self, "xi_grid", x)
        object.__setattr__(self, "eps_values", e)

    def eps_imag(self, xi):
        xi = np.asarray(xi, dtype=float)
        lx = np.log(np.clip(xi, self.xi_grid[0], self.xi_grid[-1]))
        ly = np.log(np.maximum(self.eps_values - 1.0, 1e-300))
        return 1.0 + np.exp(np.interp(lx, np.log(self.xi_grid), ly))

    def static_eps(self) -> float:
        return float(self.eps_values[0])

    @classmethod
    def from_file(cls, path):
        """Columnar (xi, eps) file; header '# units: <rad/s|eV> -'."""
        unit = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    if line.lower().startswith("# units:"):
                        unit = line.split(":", 1)[1].split()[0]
                    continue
                if line:
                    rows.append([float(tok) for tok in line.split()])
        if unit not in ("rad/s", "eV"):
            raise ValidationError("permittivity file needs units rad/s or eV")
        data = np.asarray(rows, dtype=float)
        xi = data[:, 0] * (_EV / DEFAULT_CONSTANTS.hbar if unit == "eV" else 1.0)
        return cls(xi, data[:, 1])


@dataclass(frozen=True)
class SurfaceModel:
    """Mirror description: reflection model, temperature, and mass density."""

    permittivity: object = PerfectConductor()
    temperature: float = 0.0   # K
    mass_density: float = 2.33e3  # kg / m^3
    label: str = "perfect_conductor"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.mass_density <= 0:
            raise ValidationError("mass density must be positive")


def _static_tm_coefficient(eps_model) -> float:
    """r_TM(k, xi -> 0), constant in k for the supported models."""
    if isinstance(eps_model, PerfectConductor):
        return 1.0
    e0 = eps_model.static_eps()
    if math.isinf(e0):
        return 1.0
    return (e0 - 1.0) / (e0 + 1.0)


def fresnel(polarization: str, k, xi, eps, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Reflection coefficient of the mirror at imaginary frequency.

    polarization is 'TE' or 'TM'; k is the transverse wavenumber (1/m)
    and xi the imaginary frequency (rad/s), not both zero.
    """
    k = np.asarray(k, dtype=float)
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(k < 0) or np.any(xi_arr < 0):
        raise ValidationError("k and xi must be >= 0")
    if np.any((k == 0) & (xi_arr == 0)):
        raise ValidationError("k and xi cannot both vanish")
    if polarization not in ("TE", "TM"):
        raise ValidationError("polarization must be 'TE' or 'TM'")
    if isinstance(eps, PerfectConductor):
        value = -1.0 if polarization == "TE" else 1.0
        return np.broadcast_to(value, np.broadcast(k, xi_arr).shape).copy()
    e = np.asarray(eps.eps_imag(xi_arr), dtype=float)
    if np.any(e < 1.0):
        raise ValidationError("permittivity model returned eps(i xi) < 1")
    c = constants.c
    big_k = np.sqrt((xi_arr / c) ** 2 + k ** 2)
    big_km = np.sqrt(e * (xi_arr / c) ** 2 + k ** 2)
    if polarization == "TE":
        return (big_k - big_km) / (big_k + big_km)
    return (e * big_k - big_km) / (e * big_k + big_km)


# ---------------------------------------------------------------------------
# potential evaluation (SI internals)

def _pc_zero_temperature_si(z_m: float, atom: PolarizabilityModel,
                            constants: PhysicalConstants) -> float:
    """Perfect-conductor potential via the reduced single integral.

    V(z) = -(hbar / 4 pi z^3) int dxi [alpha/(4 pi eps0)] e^{-2 xi z / c}
           (1 + 2 u + 2 u^2),  u = xi z / c.
    """
    hbar, c, eps0 = constants.hbar, constants.c, constants.epsilon0
    four_pi_eps0 = 4.0 * math.pi * eps0
    e_min = float(np.min(atom.transition_energies))

    def integrand(xi):
        u = xi * z_m / c
        return (atom.alpha(xi) / four_pi_eps0) * np.exp(-2.0 * u) * (1.0 + 2.0 * u * (1.0 + u))

    scale = 0.5 * min(c / (2.0 * z_m), e_min / hbar)
    integral = integrate_semi_infinite(integrand, scale)
    return -(hbar / (4.0 * math.pi * z_m ** 3)) * integral


def _inner_k_integral_si(xi: float, z_m: float, eps_model,
                         constants: PhysicalConstants) -> float:
    """xi^2 times the transverse integral, premultiplied for stability.

    Returns I'(xi) = (1/2) int_{xi/c}^inf dK e^{-2Kz}
                     [xi^2 r_TE - (xi^2 + 2 c^2 k^2) r_TM],
    evaluated with Gauss-Laguerre nodes after K = xi/c + t/(2z).
    """
    c = constants.c
    t, w = gauss_laguerre(_LAGUERRE_ORDER)
    kc = xi / c
    big_k = kc + t / (2.0 * z_m)
    ksq = (big_k - kc) * (big_k + kc)
    if isinstance(eps_model, PerfectConductor):
        # r_TE = -1, r_TM = +1: xi^2 r_TE - (xi^2 + 2 c^2 k^2) r_TM
        bracket = -(2.0 * xi ** 2 + 2.0 * c ** 2 * ksq)
    else:
        e = float(eps_model.eps_imag(xi))
        if e < 1.0:
            raise ValidationError("permittivity model returned eps(i xi) < 1")
        big_km = np.sqrt(e * kc ** 2 + ksq)
        r_te = (big_k - big_km) / (big_k + big_km)
        r_tm = (e * big_k - big_km) / (e * big_k + big_km)
        bracket = xi ** 2 * r_te - (xi ** 2 + 2.0 * c ** 2 * ksq) * r_tm
    return math.exp(-2.0 * kc * z_m) / (4.0 * z_m) * float(np.dot(w, bracket))


def _general_zero_temperature_si(z_m: float, atom: PolarizabilityModel,
                                 eps_model, constants: PhysicalConstants) -> float:
    hbar, c, eps0 = constants.hbar, constants.c, constants.epsilon0
    four_pi_eps0 = 4.0 * math.pi * eps0
    e_min = float(np.min(atom.transition_energies))

    def integrand(xi_array):
        out = np.empty_like(xi_array)
        alphas = atom.alpha(xi_array) / four_pi_eps0
        for i, xi in enumerate(xi_array):
            out[i] = alphas[i] * _inner_k_integral_si(float(xi), z_m, eps_model, constants)
        return out

    scale = 0.5 * min(c / (2.0 * z_m), e_min / hbar)
    integral = integrate_semi_infinite(integrand, scale)
    return (hbar / (math.pi * c ** 2)) * integral


def vcp_zero_temperature(z: float, atom: PolarizabilityModel, surface: SurfaceModel,
                         units: LatticeUnits) -> float:
    """Zero-temperature atom-mirror potential at z lattice periods, in E_r.

    Negative (attractive) for the bundled models; adaptive quadrature is
    converged well below 1e-6 relative.
    """
    if not z > 0:
        raise ValidationError("distance must be positive")
    constants = units.constants
    z_m = z * units.length_unit
    if isinstance(surface.permittivity, PerfectConductor):
        v_si = _pc_zero_temperature_si(z_m, atom, constants)
    else:
        v_si = _general_zero_temperature_si(z_m, atom, surface.permittivity, constants)
    return v_si / units.recoil_energy


def vcp_finite_temperature(z: float, atom: PolarizabilityModel, surface: SurfaceModel,
                           temperature: float, units: LatticeUnits,
                           rel_tol: float = 1e-8, max_terms: int = 2_000_000) -> float:
    """Finite-temperature potential as a Matsubara sum, in E_r.

    The n = 0 term enters with half weight and is taken analytically:
    only the TM part survives xi -> 0, through the 2 c^2 k^2 / xi^2
    factor.  The sum stops once three consecutive terms each fall below
    rel_tol of the running partial sum.
    """
    if not z > 0:
        raise ValidationError("distance must be positive")
    if not temperature > 0:
        raise ValidationError(
            "temperature must be positive; use vcp_zero_temperature for T = 0")
    constants = units.constants
    hbar, c, k_b, eps0 = constants.hbar, constants.c, constants.k_B, constants.epsilon0
    four_pi_eps0 = 4.0 * math.pi * eps0
    z_m = z * units.length_unit
    eps_model = surface.permittivity

    alpha0 = float(atom.alpha(0.0)) / four_pi_eps0
    r0 = _static_tm_coefficient(eps_model)
    terms = [-(k_b * temperature) * alpha0 * r0 / (4.0 * z_m ** 3)]

    xi_step = 2.0 * math.pi * k_b * temperature / hbar
    prefactor = 2.0 * k_b * temperature / c ** 2
    small_run = 0
    n = 1
    while n <= max_terms:
        xi = n * xi_step
        alpha_n = float(atom.alpha(xi)) / four_pi_eps0
        term = prefactor * alpha_n * _inner_k_integral_si(xi, z_m, eps_model, constants)
        terms.append(term)
        partial = abs(math.fsum(terms))
        if abs(term) < rel_tol * max(partial, 1e-300):
            small_run += 1
            if small_run >= 3:
                break
        else:
            small_run = 0
        n += 1
    else:
        raise ConvergenceError("Matsubara sum did not converge")
    return math.fsum(terms) / units.recoil_energy


def vcp_vdw(z: float, atom: PolarizabilityModel, surface: SurfaceModel,
            units: LatticeUnits) -> float:
    """Near-field (van der Waals) potential, in E_r.

    V(z) = -(hbar / 4 pi z^3) int dxi [alpha(i xi)/(4 pi eps0)]
           (eps(i xi) - 1)/(eps(i xi) + 1);
    the fraction is 1 for a perfect conductor.
    """
    if not z > 0:
        raise ValidationError("distance must be positive")
    constants = units.constants
    hbar, eps0 = constants.hbar, constants.epsilon0
    four_pi_eps0 = 4.0 * math.pi * eps0
    z_m = z * units.length_unit
    eps_model = surface.permittivity
    e_min = float(np.min(atom.transition_energies))

    if isinstance(eps_model, PerfectConductor):
        def integrand(xi):
            return atom.alpha(xi) / four_pi_eps0
    else:
        def integrand(xi):
            e = eps_model.eps_imag(xi)
            return (atom.alpha(xi) / four_pi_eps0) * (e - 1.0) / (e + 1.0)

    integral = integrate_semi_infinite(integrand, 0.5 * e_min / hbar)
    v_si = -(hbar / (4.0 * math.pi * z_m ** 3)) * integral
    return v_si / units.recoil_energy


def power_law_exponent(potential: Callable, z: float, rel_step: float = 1e-3) -> float:
    """Local power-law exponent alpha(z) = -z V'(z) / V(z).

    Evaluated as a centered log-derivative with the given relative step;
    an exact A / z^p gives p.  Raises if V changes sign (or vanishes)
    across the stencil.
    """
    if not z > 0:
        raise ValidationError("distance must be positive")
    lo = float(potential(z * (1.0 - rel_step)))
    hi = float(potential(z * (1.0 + rel_step)))
    if lo == 0.0 or hi == 0.0 or (lo > 0) != (hi > 0):
        raise ValidationError("potential crosses zero inside the stencil")
    dlog_v = math.log(abs(hi)) - math.log(abs(lo))
    dlog_z = math.log1p(rel_step) - math.log1p(-rel_step)
    return -dlog_v / dlog_z


# ---------------------------------------------------------------------------
# tabulation

@dataclass(frozen=True)
class GridSpec:
    """Logarithmic tabulation grid (periods)."""

    z_min: float
    z_max: float
    num: int = 240

    def __post_init__(self):
        if not (0 < self.z_min < self.z_max):
            raise ValidationError("need 0 < z_min < z_max")
        if self.num < 16:
            raise ValidationError("grid needs at least 16 nodes")

    def nodes(self) -> np.ndarray:
        return np.geomspace(self.z_min, self.z_max, self.num)


@dataclass(eq=False)
class PotentialTable:
    """Tabulated single-sign potential z -> V with log-log cubic interpolation.

    grid is in lattice periods, values in recoil units.  Calling the
    table evaluates the interpolant; power laws are reproduced to
    rounding because they are straight lines in log-log.
    """

    grid: np.ndarray
    values: np.ndarray
    label: str = ""
    _sign: int = field(init=False, repr=False)
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 4:
            raise ValidationError("table needs matching 1-d arrays, >= 4 nodes")
        if np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ValidationError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValidationError("table values must be finite")
        if np.any(v == 0) or (np.any(v > 0) and np.any(v < 0)):
            raise ValidationError("table requires nonzero single-sign values")
        sign = 1 if v[0] > 0 else -1
        self.grid = g
        self.values = v
        self._sign = sign
        self._spline = CubicSpline(np.log(g), np.log(np.abs(v)))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.grid[0] * (1 - 1e-12)) or np.any(z > self.grid[-1] * (1 + 1e-12)):
            raise ValidationError("evaluation outside the tabulated range")
        out = self._sign * np.exp(self._spline(np.log(z)))
        return float(out) if out.ndim == 0 else out

    @property
    def z_min(self) -> float:
        return float(self.grid[0])

    @property
    def z_max(self) -> float:
        return float(self.grid[-1])


def build_potential_table(potential: Callable, grid_spec: GridSpec,
                          label: str = "", rel_tol: float = 1e-4,
                          executor=None) -> PotentialTable:
    """Tabulate a potential and verify interpolation against direct probes.

    Probes at geometric midpoints of every interval must agree with the
    direct evaluation to rel_tol relative, otherwise a denser grid is
    advised via ValidationError.
    """
    nodes = grid_spec.nodes()
    if executor is not None:
        values = np.fromiter(executor.map(potential, nodes), dtype=float, count=len(nodes))
    else:
        values = np.array([potential(z) for z in nodes], dtype=float)
    table = PotentialTable(nodes, values, label=label)
    probes = np.sqrt(nodes[:-1] * nodes[1:])
    direct = np.array([potential(z) for z in probes], dtype=float)
    interp = table(probes)
    err = np.max(np.abs(interp - direct) / np.maximum(np.abs(direct), 1e-300))
    if err > rel_tol:
        raise ValidationError(
            f"table interpolation error {err:.2e} exceeds {rel_tol:.0e}; use a denser grid")
    return table

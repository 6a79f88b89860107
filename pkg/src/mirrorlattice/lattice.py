"""Wall-bounded tilted-lattice eigenproblem.

The trap is a vertical standing wave terminated by a hard wall at z = 0,
so the stationary states solve

    -(1/pi^2) psi'' + [delta_g z + (U/2)(1 - cos 2 pi z)] psi = E psi

with psi(0) = psi(z_max) = 0, z in lattice periods and E in recoil
units.  A three-point stencil turns this into a symmetric tridiagonal
eigenproblem; selected eigenpairs are computed by Sturm-sequence
bisection (LAPACK dstebz) plus inverse iteration (dstein), which stays
cheap at mesh sizes around 1e6 where full diagonalization would not.

States are labelled by the well holding their probability centroid and
by band (spatial spread beyond three periods marks a higher band).
Interior states recover the uniform ladder spacing delta_g, which is
the basis of the translated reference states used for comparisons.
Solves are deterministic and the assembled operator is immutable, so
independent eigensolves can safely run in parallel threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .constants import LatticeUnits, to_hz
from .errors import ConvergenceError, ValidationError

__all__ = [
    "LatticeConfig",
    "Mesh",
    "EigenState",
    "SpectrumTable",
    "KINETIC_COEFF",
    "lattice_potential",
    "assemble_hamiltonian",
    "solve_band",
    "solve_energies",
    "label_wells",
    "first_band",
    "energy_differences",
    "reference_ws_state",
]

# Kinetic prefactor of -(d^2/dx^2) after nondimensionalization:
# with z in units lambda_l/2 and E in units E_r, p^2/2m -> -(1/pi^2) d^2/dx^2.
KINETIC_COEFF = 1.0 / math.pi ** 2

#: band label assigned when the spatial spread exceeds this many periods
_FIRST_BAND_MAX_SPREAD = 3.0


@dataclass(frozen=True, eq=False)
class LatticeConfig:
    """Complete definition of one eigenproblem.

    depth is the lattice depth U in recoil units, gravity_step the
    dimensionless tilt delta_g, z_max the box size in periods and
    mesh_points the number N of interior mesh nodes.  extra_potential,
    if given, is any callable z -> V (periods -> recoil units) added to
    the trap; interpolation tables qualify.
    """

    depth: float
    gravity_step: float
    z_max: float = 30.0
    mesh_points: int = 419_999
    extra_potential: Optional[Callable] = None

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError("lattice depth must be >= 0")
        if not self.z_max > 0:
            raise ValidationError("z_max must be positive")
        if self.mesh_points < 100:
            raise ValidationError("mesh_points must be at least 100")

    @property
    def spacing(self) -> float:
        return self.z_max / (self.mesh_points + 1)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Interior nodes z_1..z_N of the uniform grid on (0, z_max).

    z_0 = 0 and z_{N+1} = z_max are implicit Dirichlet boundary nodes.
    """

    points: np.ndarray
    spacing: float
    z_max: float

    @classmethod
    def from_config(cls, config: LatticeConfig) -> "Mesh":
        n = config.mesh_points
        dz = config.spacing
        points = dz * np.arange(1, n + 1)
        return cls(points=points, spacing=dz, z_max=config.z_max)

    def __len__(self) -> int:
        return len(self.points)


def lattice_potential(z, depth: float, gravity_step: float):
    """Trap plus gravity, V(z) = delta_g z + (U/2)(1 - cos 2 pi z)."""
    z = np.asarray(z, dtype=float)
    return gravity_step * z + 0.5 * depth * (1.0 - np.cos(2.0 * math.pi * z))


def assemble_hamiltonian(config: LatticeConfig, mesh: Mesh):
    """Return (diagonal, offdiagonal) of the symmetric tridiagonal operator."""
    if len(mesh) != config.mesh_points or not math.isclose(
            mesh.spacing, config.spacing, rel_tol=1e-12):
        raise ValidationError("mesh does not match config")
    dz = mesh.spacing
    kin = KINETIC_COEFF / dz ** 2
    v = lattice_potential(mesh.points, config.depth, config.gravity_step)
    if config.extra_potential is not None:
        v = v + np.asarray(config.extra_potential(mesh.points), dtype=float)
    diag = 2.0 * kin + v
    offdiag = np.full(len(mesh) - 1, -kin)
    return diag, offdiag


@dataclass(eq=False)
class EigenState:
    """One bound state: energy in E_r, real wavefunction sampled on the mesh.

    The wavefunction is normalized with the mesh measure,
    sum |psi_i|^2 dz = 1, so |psi|^2 is a continuum probability density.
    norm_loss records probability clipped by a translation (see
    reference_ws_state); degenerate flags members of an eigenvalue
    cluster tighter than the resolution tolerance.
    """

    energy: float
    wavefunction: np.ndarray
    mesh: Mesh
    well_index: int = 0
    band_index: int = 1
    norm_loss: float = 0.0
    degenerate: bool = False
    _moments: tuple = field(default=None, repr=False)

    def _cache_moments(self):
        if self._moments is None:
            density = self.wavefunction ** 2 * self.mesh.spacing
            zc = float(np.dot(self.mesh.points, density))
            z2 = float(np.dot(self.mesh.points ** 2, density))
            self._moments = (zc, z2)
        return self._moments

    @property
    def centroid(self) -> float:
        return self._cache_moments()[0]

    @property
    def spread(self) -> float:
        zc, z2 = self._cache_moments()
        return math.sqrt(max(z2 - zc * zc, 0.0))

    def density(self) -> np.ndarray:
        return self.wavefunction ** 2


@dataclass(frozen=True)
class SpectrumTable:
    """Ladder rows (n, E_n, dE_n = E_{n+1} - E_n, dE_n in Hz)."""

    wells: np.ndarray
    energies: np.ndarray
    differences: np.ndarray
    differences_hz: np.ndarray

    def __post_init__(self):
        if not np.all(np.diff(self.wells) > 0):
            raise ValidationError("well indices must be strictly increasing")

    def rows(self):
        return zip(self.wells, self.energies, self.differences, self.differences_hz)


def _sturm_solve(diag, offdiag, *, count=None, window=None, eigvals_only=False):
    """Selected eigenpairs via bisection plus inverse iteration."""
    if count is not None:
        if count < 1:
            raise ValidationError("count must be >= 1")
        select, select_range = "i", (0, count - 1)
    elif window is not None:
        lo, hi = window
        if not hi > lo:
            raise ValidationError("energy window is empty")
        select, select_range = "v", (lo, hi)
    else:
        raise ValidationError("either count or window is required")
    try:
        return eigh_tridiagonal(
            diag, offdiag, select=select, select_range=select_range,
            eigvals_only=eigvals_only, lapack_driver="stebz")
    except LinAlgError as exc:
        raise ConvergenceError(
            f"inverse iteration failed for selection {select}={select_range}: {exc}"
        ) from exc


def solve_energies(config: LatticeConfig, *, count=None, window=None) -> np.ndarray:
    """Eigenvalues only; cheaper when wavefunctions are not needed."""
    mesh = Mesh.from_config(config)
    diag, offdiag = assemble_hamiltonian(config, mesh)
    return np.asarray(
        _sturm_solve(diag, offdiag, count=count, window=window, eigvals_only=True))


def solve_band(config: LatticeConfig, *, count=None, window=None,
               residual_tol: float = 1e-8) -> list:
    """Solve for eigenpairs in a window or the lowest `count`, labelled.

    Returns EigenState objects sorted by energy, each normalized against
    the mesh measure and labelled with well and band indices.  Raises
    ConvergenceError if inverse iteration fails and ValidationError on
    an empty selection.
    """
    mesh = Mesh.from_config(config)
    diag, offdiag = assemble_hamiltonian(config, mesh)
    vals, vecs = _sturm_solve(diag, offdiag, count=count, window=window)
    if len(vals) == 0:
        raise ValidationError("no eigenvalues in the requested window")
    dz = mesh.spacing
    vecs = vecs / math.sqrt(dz)

    # Residual guard: ||H psi - E psi|| against the tridiagonal operator.
    kin = KINETIC_COEFF / dz ** 2
    upper = np.zeros_like(vecs)
    lower = np.zeros_like(vecs)
    upper[:-1] = vecs[1:]
    lower[1:] = vecs[:-1]
    hv = diag[:, None] * vecs - kin * (upper + lower)
    residuals = np.linalg.norm(hv - vals[None, :] * vecs, axis=0) / np.linalg.norm(vecs, axis=0)
    scales = np.maximum(np.abs(vals), 1.0)
    bad = residuals > residual_tol * scales * 1e4  # hard failure only
    if np.any(bad):
        raise ConvergenceError(
            f"eigenpair residual too large for eigenvalues {vals[bad]}")

    gaps = np.diff(vals)
    tight = np.zeros(len(vals), dtype=bool)
    cluster = gaps < 1e-12 * np.maximum(np.abs(vals[1:]), 1.0)
    tight[:-1] |= cluster
    tight[1:] |= cluster

    states = [
        EigenState(energy=float(vals[i]), wavefunction=vecs[:, i].copy(),
                   mesh=mesh, degenerate=bool(tight[i]))
        for i in range(len(vals))
    ]
    return label_wells(states)


def label_wells(states: Sequence[EigenState]) -> list:
    """Assign well indices from probability centroids and band labels from spread.

    The centroid is rounded to the nearest well, ties toward smaller n.
    Wall-modified states carry asymmetric uphill tails that drag their
    centroid off the hosting well, so within the first band the ladder
    rank fixes the labels, anchored by the centroid labels of the
    interior states (where both rules agree); the lowest trapped state
    then lands on n = 1.  States spread over more than three periods
    are marked band >= 2 and keep their plain centroid label.
    """
    labelled = []
    for state in states:
        c = state.centroid
        if not (0.0 < c < state.mesh.z_max):
            raise ValidationError(f"state centroid {c} outside the box")
        nearest = math.floor(c + 0.5)
        if math.isclose(c - math.floor(c), 0.5, abs_tol=1e-12):
            nearest = math.floor(c)  # tie toward smaller n
        state.well_index = int(nearest)
        state.band_index = 1 if state.spread <= _FIRST_BAND_MAX_SPREAD else 2
        labelled.append(state)

    band = sorted((s for s in labelled if s.band_index == 1), key=lambda s: s.energy)
    if len(band) >= 2:
        offsets = sorted(s.well_index - (rank + 1) for rank, s in enumerate(band))
        offset = offsets[len(offsets) // 2]
        for rank, s in enumerate(band):
            s.well_index = rank + 1 + offset
    return labelled


def first_band(states: Sequence[EigenState]) -> list:
    return [s for s in states if s.band_index == 1]


def energy_differences(states: Sequence[EigenState], units: LatticeUnits) -> SpectrumTable:
    """Ladder table of E_n and dE_n = E_{n+1} - E_n for consecutive wells."""
    band = sorted(first_band(states), key=lambda s: s.well_index)
    if len(band) < 2:
        raise ValidationError("need at least two first-band states")
    wells = np.array([s.well_index for s in band])
    missing = sorted(set(range(wells[0], wells[-1] + 1)) - set(wells.tolist()))
    if missing:
        raise ValidationError(f"missing wells in ladder: {missing}")
    energies = np.array([s.energy for s in band])
    diffs = np.diff(energies)
    return SpectrumTable(
        wells=wells[:-1],
        energies=energies[:-1],
        differences=diffs,
        differences_hz=np.array([to_hz(d, units) for d in diffs]),
    )


def reference_ws_state(interior_state: EigenState, target_well: int,
                       gravity_step: float) -> EigenState:
    """Translate a deep-interior state by whole periods to a target well.

    Far from the wall the ladder is quasi-periodic, so the state of well
    p shifted by (n - p) periods approximates the state of well n, with
    energy offset (n - p) * gravity_step.  Probability pushed outside
    the box by the shift is recorded in norm_loss (the result is
    renormalized).
    """
    src = interior_state
    if src.well_index < 10:
        raise ValidationError(
            "reference translation requires an interior state (well >= 10)")
    shift_wells = target_well - src.well_index
    mesh = src.mesh
    dz = mesh.spacing
    steps = shift_wells / dz
    psi = src.wavefunction
    if math.isclose(steps, round(steps), abs_tol=1e-9):
        k = int(round(steps))
        shifted = np.zeros_like(psi)
        if k >= 0:
            if k < len(psi):
                shifted[k:] = psi[: len(psi) - k]
        else:
            shifted[:k] = psi[-k:]
    else:
        shifted = np.interp(mesh.points - shift_wells, mesh.points, psi,
                            left=0.0, right=0.0)
    norm = float(np.sum(shifted ** 2) * dz)
    loss = max(1.0 - norm, 0.0)
    if norm > 0:
        shifted = shifted / math.sqrt(norm)
    return EigenState(
        energy=src.energy + shift_wells * gravity_step,
        wavefunction=shifted,
        mesh=mesh,
        well_index=target_well,
        band_index=src.band_index,
        norm_loss=loss if loss > 1e-6 else 0.0,
    )

"""Command-line driver: reproducible runs, persistence, plot-data emission.

Subcommands map onto the computation stages (spectrum, potential,
corrections, yukawa, exclusion).  Every output file is CSV or JSON with
a '#'-prefixed metadata header embedding the configuration hash and the
bundled-data checksum, numbers at 17 significant digits, written via
temp file plus atomic rename.  Exit codes: 0 success, 2 configuration
error, 3 numerical-convergence failure, 4 cache corruption.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import casimir, corrections, finite_size, lattice, yukawa
from .cache import ResultCache
from .config import RunConfig, load_config
from .constants import to_hz
from .errors import (CacheCorruptionError, ConfigError, ConvergenceError,
                     ValidationError)

__all__ = ["main", "cmd_spectrum", "cmd_potential", "cmd_corrections",
           "cmd_yukawa", "cmd_exclusion"]


def _fmt(x) -> str:
    return f"{float(x):.16e}"


def _atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, meta: dict, columns: list):
    """CSV with '#' header metadata; columns is a list of (name, values)."""
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines.append(",".join(name for name, _ in columns))
    arrays = [np.asarray(vals) for _, vals in columns]
    for i in range(len(arrays[0])):
        lines.append(",".join(
            _fmt(a[i]) if np.issubdtype(a.dtype, np.floating) else str(a[i])
            for a in arrays))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _meta(config: RunConfig, stage: str) -> dict:
    return {
        "generator": f"mirrorlattice {__version__}",
        "config_hash": config.hash(),
        "stage_hash": config.stage_key(stage) if stage in
                      ("eigensolve", "potential", "corrections") else config.hash(),
        "rb_data_sha256": casimir.bundled_data_checksum(),
    }


def _emit_resolved_config(config: RunConfig, out_dir: Path):
    doc = {"config_hash": config.hash(), "resolved": config.resolved()}
    _atomic_write_text(out_dir / "resolved_config.json",
                       json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _solve_cached(config: RunConfig, cache: ResultCache, count: int,
                  isotope=None, extra=None, key_extra: str = ""):
    """Eigensolve through the cache; returns (states, 'cache hit' flag)."""
    units = config.units(isotope)
    trap = config["trap"]
    key = config.stage_key("eigensolve")
    if isotope:
        key = f"{key}-{isotope}"
    if key_extra:
        key = f"{key}-{key_extra}"
    key = f"{key}-n{count}"

    cached = cache.load_eigen(key) if extra is None else None
    mesh = None
    if cached is not None:
        mesh = lattice.Mesh.from_config(lattice.LatticeConfig(
            depth=trap["depth"], gravity_step=units.gravity_step,
            z_max=trap["z_max"], mesh_points=trap["mesh_points"]))
        states = []
        for i in range(len(cached["energies"])):
            states.append(lattice.EigenState(
                energy=float(cached["energies"][i]),
                wavefunction=cached["wavefunctions"][:, i],
                mesh=mesh,
                well_index=int(cached["wells"][i]),
                band_index=int(cached["bands"][i])))
        return states, True

    cfg = lattice.LatticeConfig(
        depth=trap["depth"], gravity_step=units.gravity_step,
        z_max=trap["z_max"], mesh_points=trap["mesh_points"],
        extra_potential=extra)
    states = lattice.solve_band(cfg, count=count)
    if extra is None:
        cache.store_eigen(
            key,
            energies=np.array([s.energy for s in states]),
            wavefunctions=np.column_stack([s.wavefunction for s in states]),
            wells=[s.well_index for s in states],
            bands=[s.band_index for s in states],
            meta={"count": count, "isotope": isotope or config["species"]["isotope"]})
    return states, False


# ---------------------------------------------------------------------------
# subcommands

def cmd_spectrum(config: RunConfig, out_dir: Path, cache: ResultCache, threads: int = 1):
    """Ladder table (n, E_n, dE_n, dE_n[Hz]) as CSV and JSON."""
    units = config.units()
    wells = config["trap"]["wells"]
    states, hit = _solve_cached(config, cache, count=wells + 5)
    print(f"eigensolve: {'cache hit' if hit else 'computed'}", file=sys.stderr)
    table = lattice.energy_differences(states, units)
    keep = slice(0, wells)
    meta = _meta(config, "eigensolve")
    write_csv(out_dir / "spectrum.csv", meta, [
        ("n", table.wells[keep].astype(int)),
        ("E_n_recoil", table.energies[keep]),
        ("dE_n_recoil", table.differences[keep]),
        ("dE_n_hz", table.differences_hz[keep]),
    ])
    doc = dict(meta)
    doc["rows"] = [
        {"n": int(n), "energy_recoil": e, "delta_recoil": d, "delta_hz": dh}
        for n, e, d, dh in zip(table.wells[keep], table.energies[keep],
                               table.differences[keep], table.differences_hz[keep])
    ]
    _atomic_write_text(out_dir / "spectrum.json", json.dumps(doc, indent=2) + "\n")
    if config["output"]["wavefunctions"]:
        for s in states:
            if s.band_index != 1 or s.well_index > wells:
                continue
            write_csv(out_dir / f"state_{s.well_index:03d}.csv", meta, [
                ("z_periods", s.mesh.points), ("psi", s.wavefunction)])
    _emit_resolved_config(config, out_dir)


def cmd_potential(config: RunConfig, out_dir: Path, cache: ResultCache, threads: int = 1):
    """Surface potential, its regularized version, trap sum, and exponents."""
    units = config.units()
    atom = casimir.bundled_rubidium(config.constants())
    surface = config.surface()
    pot = config["potential"]
    trap = config["trap"]
    profile = finite_size.DensityProfile(config["atom_size"]["profile"],
                                         config["atom_size"]["radius"])

    if surface.temperature > 0:
        def v_point(z):
            return casimir.vcp_finite_temperature(z, atom, surface,
                                                  surface.temperature, units)
    else:
        def v_point(z):
            return casimir.vcp_zero_temperature(z, atom, surface, units)

    grid = np.geomspace(pot["z_min"], pot["z_max"], pot["points"])
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        if executor is not None:
            v_cp = np.fromiter(executor.map(v_point, grid), dtype=float, count=len(grid))
        else:
            v_cp = np.array([v_point(z) for z in grid])
    finally:
        if executor is not None:
            executor.shutdown()

    headroom = 2.0 * profile.radius / units.length_unit
    source = casimir.build_potential_table(
        v_point, casimir.GridSpec(min(pot["z_min"], 1e-4), pot["z_max"] + headroom, 420),
        label=f"cp:{surface.label}")
    v_reg = np.array([finite_size.regularize(source, profile, z, units) for z in grid])
    v_trap = lattice.lattice_potential(grid, trap["depth"], units.gravity_step)
    yk = config["yukawa"]
    params = yukawa.YukawaParams(yk["alpha"], yk["lambda_y"], yk["exponent_factor"])
    v_yukawa = yukawa.yukawa_potential(grid, params, surface, units.species, units)

    meta = _meta(config, "potential")
    write_csv(out_dir / "potential.csv", meta, [
        ("z_periods", grid),
        ("v_cp_recoil", v_cp),
        ("v_reg_recoil", v_reg),
        ("v_trap_plus_cp_recoil", v_trap + v_cp),
        ("v_yukawa_recoil", np.asarray(v_yukawa)),
    ])

    exp_point = np.array([casimir.power_law_exponent(source, z) for z in grid])
    reg_table = finite_size.regularize_table(source, profile, units)
    lo = max(reg_table.z_min * 1.01, grid[0])
    exp_grid = np.geomspace(lo, grid[-1] * 0.999, len(grid))
    exp_reg = np.array([casimir.power_law_exponent(
        lambda zz: finite_size.regularize(source, profile, float(zz), units), z)
        for z in exp_grid])
    write_csv(out_dir / "exponent.csv", meta, [
        ("z_periods", exp_grid),
        ("exponent_point", np.array([casimir.power_law_exponent(source, z) for z in exp_grid])),
        ("exponent_reg", exp_reg),
    ])
    _emit_resolved_config(config, out_dir)
    return exp_point


def cmd_corrections(config: RunConfig, out_dir: Path, cache: ResultCache, threads: int = 1):
    """Correction table over wells x radii x profiles, plus the comparison file."""
    units = config.units()
    atom = casimir.bundled_rubidium(config.constants())
    surface = config.surface()
    wells = config["trap"]["wells"]
    wells = min(wells, 12) if wells >= 12 else wells
    radii = list(config["atom_size"]["radii"])
    profiles = list(config["atom_size"]["profiles"])

    states, hit = _solve_cached(config, cache, count=wells + 5)
    print(f"eigensolve: {'cache hit' if hit else 'computed'}", file=sys.stderr)
    trap = config["trap"]
    cfg = lattice.LatticeConfig(depth=trap["depth"], gravity_step=units.gravity_step,
                                z_max=trap["z_max"], mesh_points=trap["mesh_points"])
    point_table = corrections.build_point_table(cfg, atom, surface, units,
                                                max_radius=max(radii))
    rows = corrections.correction_table(
        cfg, atom, surface, radii, profiles, units, wells=wells, states=states,
        point_table=point_table,
        regularize_trap=config["atom_size"]["regularize_trap"])

    meta = _meta(config, "corrections")
    write_csv(out_dir / "corrections.csv", meta, [
        ("n", np.array([r.well for r in rows], dtype=int)),
        ("radius_m", np.array([r.radius for r in rows])),
        ("profile", np.array([r.profile for r in rows], dtype=object)),
        ("delta_e_hz", np.array([r.delta_e_hz for r in rows])),
    ])
    doc = dict(meta)
    doc["rows"] = [r.__dict__ for r in rows]
    _atomic_write_text(out_dir / "corrections.json",
                       json.dumps(doc, indent=2, default=str) + "\n")

    comparison = corrections.well_center_comparison(
        rows, point_table, units, radius=radii[0], profile=profiles[0])
    write_csv(out_dir / "well_center_comparison.csv", meta, [
        ("n", np.array([c[0] for c in comparison], dtype=int)),
        ("delta_e_hz", np.array([c[1] for c in comparison])),
        ("well_center_hz", np.array([c[2] for c in comparison])),
        ("ratio", np.array([c[3] for c in comparison])),
    ])
    _emit_resolved_config(config, out_dir)
    return rows


def cmd_yukawa(config: RunConfig, out_dir: Path, cache: ResultCache, threads: int = 1):
    """Two-isotope differential table for the configured Yukawa parameters."""
    yk = config["yukawa"]
    surface = config.surface()
    units87 = config.units("Rb87")
    trap = config["trap"]
    cfg = lattice.LatticeConfig(depth=trap["depth"], gravity_step=units87.gravity_step,
                                z_max=trap["z_max"], mesh_points=trap["mesh_points"])
    params = yukawa.YukawaParams(yk["alpha"], yk["lambda_y"], yk["exponent_factor"])
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        rows = yukawa.isotope_differential(
            params, surface, cfg, wells=yk["wells"],
            species_pair=(config.species("Rb85"), config.species("Rb87")),
            lambda_l=config["species"]["lambda_l"],
            constants=config.constants(), executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    meta = _meta(config, "eigensolve")
    meta["exponent_factor"] = yk["exponent_factor"]
    write_csv(out_dir / "isotope_differential.csv", meta, [
        ("n", np.array([r.well for r in rows], dtype=int)),
        ("d_e_hz", np.array([r.d_e_hz for r in rows])),
    ])
    _emit_resolved_config(config, out_dir)
    return rows


def cmd_exclusion(config: RunConfig, out_dir: Path, cache: ResultCache, threads: int = 1):
    """Exclusion curves for the configured scenario(s)."""
    yk = config["yukawa"]
    surface = config.surface()
    units87 = config.units("Rb87")
    trap = config["trap"]
    cfg = lattice.LatticeConfig(depth=trap["depth"], gravity_step=units87.gravity_step,
                                z_max=trap["z_max"], mesh_points=trap["mesh_points"])
    lam_grid = np.geomspace(yk["lambda_min"], yk["lambda_max"], yk["lambda_points"])
    scenarios = ("near", "far40", "far70") if yk["scenario"] == "all" else (yk["scenario"],)
    curves = []
    for scenario in scenarios:
        curve = yukawa.exclusion_curve(
            scenario, lam_grid, yk["sensitivity"], surface, cfg,
            exponent_factor=yk["exponent_factor"],
            species_pair=(config.species("Rb85"), config.species("Rb87")),
            lambda_l=config["species"]["lambda_l"], constants=config.constants())
        meta = _meta(config, "eigensolve")
        meta["scenario"] = scenario
        meta["sensitivity_hz"] = yk["sensitivity"]
        write_csv(out_dir / f"exclusion_{scenario}.csv", meta, [
            ("lambda_y_m", curve.lambdas),
            ("alpha_y_limit", curve.alpha_limits),
        ])
        curves.append(curve)
    _emit_resolved_config(config, out_dir)
    return curves


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "potential": cmd_potential,
    "corrections": cmd_corrections,
    "yukawa": cmd_yukawa,
    "exclusion": cmd_exclusion,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorlattice",
        description="Trapped-atom spectra near a mirror: ladders, surface "
                    "potentials, energy corrections, and short-range gravity limits.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a config value")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--cache", default=None, help="cache directory")
        p.add_argument("--no-cache", action="store_true", help="disable the cache")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent computations")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        out_dir = Path(args.out or config["output"]["directory"])
        out_dir.mkdir(parents=True, exist_ok=True)
        cache_dir = args.cache or config["cache"]["directory"]
        enabled = config["cache"]["enabled"] and not args.no_cache
        cache = ResultCache(cache_dir, enabled=enabled)
        _COMMANDS[args.command](config, out_dir, cache, threads=max(args.threads, 1))
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CacheCorruptionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

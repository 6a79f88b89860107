"""Run configuration: schema, strict validation, overrides, and hashing.

A run is described by one JSON file of sections; unknown sections or
keys are rejected so typos cannot silently fall back to defaults.  The
fully resolved configuration is written next to every result, and
content hashes over the stage-relevant subset key the result cache.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .constants import (DEFAULT_CONSTANTS, DEFAULT_WAVELENGTH, RB85, RB87,
                        SpeciesData, make_units)
from .errors import ConfigError
from . import casimir

__all__ = ["DEFAULTS", "RunConfig", "load_config", "parse_override"]


DEFAULTS = {
    "trap": {
        "depth": 3.0,              # E_r
        "z_max": 30.0,             # periods
        "mesh_points": 419_999,    # one period = 14000 steps
        "wells": 13,
    },
    "species": {
        "isotope": "Rb87",
        "lambda_l": DEFAULT_WAVELENGTH,
        "mass_rb85": RB85.mass,
        "mass_rb87": RB87.mass,
    },
    "constants": {
        "g_earth": DEFAULT_CONSTANTS.g_earth,
        "G": DEFAULT_CONSTANTS.G,
        "hbar": DEFAULT_CONSTANTS.hbar,
        "c": DEFAULT_CONSTANTS.c,
        "k_B": DEFAULT_CONSTANTS.k_B,
        "epsilon0": DEFAULT_CONSTANTS.epsilon0,
    },
    "surface": {
        "permittivity": "perfect_conductor",
        "drude_plasma": 1.37e16,     # rad/s, used when permittivity = drude
        "drude_relaxation": 4.1e13,  # rad/s
        "temperature": 0.0,          # K
        "mass_density": 2.33e3,      # kg/m^3
    },
    "atom_size": {
        "radius": 200e-12,           # m
        "profile": "uniform",
        "regularize_trap": False,
        "radii": [200e-12, 300e-12],
        "profiles": ["uniform", "parabolic"],
    },
    "potential": {
        "z_min": 0.05,
        "z_max": 30.0,
        "points": 400,
    },
    "yukawa": {
        "alpha": 3e10,
        "lambda_y": 1e-6,            # m
        "exponent_factor": 2,
        "wells": 24,
        "scenario": "near",
        "sensitivity": 1e-4,         # Hz
        "lambda_min": 3e-7,          # m, exclusion grid
        "lambda_max": 3e-5,
        "lambda_points": 25,
    },
    "output": {
        "directory": "out",
        "formats": ["csv", "json"],
        "wavefunctions": False,
    },
    "cache": {
        "directory": ".mirrorlattice-cache",
        "enabled": True,
    },
}

_CHOICES = {
    ("species", "isotope"): ("Rb85", "Rb87"),
    ("surface", "permittivity"): ("perfect_conductor", "drude"),
    ("atom_size", "profile"): ("uniform", "parabolic"),
    ("yukawa", "scenario"): ("near", "far40", "far70", "all"),
    ("yukawa", "exponent_factor"): (1, 2),
}

# Sections whose values feed each computation stage; cache keys hash these.
STAGE_SECTIONS = {
    "eigensolve": ("trap", "species", "constants", "yukawa"),
    "potential": ("species", "constants", "surface", "atom_size", "potential"),
    "corrections": ("trap", "species", "constants", "surface", "atom_size"),
}


def _type_check(section, key, default_value, value):
    if isinstance(default_value, bool):
        ok = isinstance(value, bool)
    elif isinstance(default_value, (int, float)):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default_value, str):
        ok = isinstance(value, str)
    elif isinstance(default_value, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{section}.{key}: expected {type(default_value).__name__}, "
                          f"got {type(value).__name__}")
    choices = _CHOICES.get((section, key))
    if choices is not None and value not in choices:
        raise ConfigError(f"{section}.{key}: must be one of {choices}")


class RunConfig:
    """Validated configuration with section attribute access and hashing."""

    def __init__(self, data: dict):
        merged = copy.deepcopy(DEFAULTS)
        for section, content in data.items():
            if section not in merged:
                raise ConfigError(f"unknown config section '{section}'")
            if not isinstance(content, dict):
                raise ConfigError(f"section '{section}' must be a table of keys")
            for key, value in content.items():
                if key not in merged[section]:
                    raise ConfigError(f"unknown key '{section}.{key}'")
                _type_check(section, key, merged[section][key], value)
                merged[section][key] = value
        self._data = merged
        self._validate_ranges()

    def _validate_ranges(self):
        d = self._data
        if d["trap"]["depth"] < 0:
            raise ConfigError("trap.depth must be >= 0")
        if d["trap"]["z_max"] <= 0:
            raise ConfigError("trap.z_max must be positive")
        if d["trap"]["mesh_points"] < 100:
            raise ConfigError("trap.mesh_points must be >= 100")
        if d["trap"]["wells"] < 1:
            raise ConfigError("trap.wells must be >= 1")
        if d["surface"]["temperature"] < 0:
            raise ConfigError("surface.temperature must be >= 0")
        if d["surface"]["mass_density"] <= 0:
            raise ConfigError("surface.mass_density must be positive")
        if d["atom_size"]["radius"] <= 0:
            raise ConfigError("atom_size.radius must be positive")
        if d["yukawa"]["sensitivity"] <= 0:
            raise ConfigError("yukawa.sensitivity must be positive")
        if not 0 < d["yukawa"]["lambda_min"] < d["yukawa"]["lambda_max"]:
            raise ConfigError("yukawa lambda grid bounds out of order")
        if not 0 < d["potential"]["z_min"] < d["potential"]["z_max"]:
            raise ConfigError("potential grid bounds out of order")

    def __getitem__(self, section: str) -> dict:
        return self._data[section]

    def resolved(self) -> dict:
        return copy.deepcopy(self._data)

    def subset(self, sections) -> dict:
        return {s: copy.deepcopy(self._data[s]) for s in sections}

    def hash(self, sections=None) -> str:
        payload = self.subset(sections) if sections else self._data
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def stage_key(self, stage: str) -> str:
        return self.hash(STAGE_SECTIONS[stage])

    # -- physics object builders ------------------------------------------

    def constants(self):
        c = self._data["constants"]
        return DEFAULT_CONSTANTS.with_overrides(
            g_earth=c["g_earth"], G=c["G"], hbar=c["hbar"], c=c["c"],
            k_B=c["k_B"], epsilon0=c["epsilon0"])

    def species(self, isotope: str | None = None) -> SpeciesData:
        name = isotope or self._data["species"]["isotope"]
        mass = {"Rb85": self._data["species"]["mass_rb85"],
                "Rb87": self._data["species"]["mass_rb87"]}[name]
        return SpeciesData(name, mass)

    def units(self, isotope: str | None = None):
        return make_units(self.species(isotope), self._data["species"]["lambda_l"],
                          self.constants())

    def surface(self):
        s = self._data["surface"]
        if s["permittivity"] == "perfect_conductor":
            eps = casimir.PerfectConductor()
        else:
            eps = casimir.DrudeModel(s["drude_plasma"], s["drude_relaxation"])
        return casimir.SurfaceModel(permittivity=eps, temperature=s["temperature"],
                                    mass_density=s["mass_density"],
                                    label=s["permittivity"])


def parse_override(text: str):
    """Split 'section.key=value' into parts, JSON-decoding the value."""
    try:
        dotted, raw = text.split("=", 1)
        section, key = dotted.split(".", 1)
    except ValueError as exc:
        raise ConfigError(f"override '{text}' is not section.key=value") from exc
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings allowed
    return section, key, value


def load_config(path: str | None, overrides=()) -> RunConfig:
    """Merge defaults, an optional JSON file, and --set overrides."""
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    for text in overrides:
        section, key, value = parse_override(text)
        data.setdefault(section, {})[key] = value
    return RunConfig(data)

"""Write-once result cache for eigensolves.

Entries are keyed by content hashes of the stage-relevant configuration
subset, stored as .npz next to a small JSON sidecar, and written with a
temp-file plus atomic rename so concurrent runs sharing one cache
directory never observe partial files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import CacheCorruptionError

__all__ = ["ResultCache"]

_FORMAT_VERSION = 1


class ResultCache:
    def __init__(self, directory, enabled: bool = True):
        self.directory = Path(directory)
        self.enabled = enabled
        if enabled:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _paths(self, key: str):
        return (self.directory / f"eigen-{key}.npz",
                self.directory / f"eigen-{key}.json")

    def load_eigen(self, key: str):
        """Return {energies, wavefunctions, wells, bands, meta} or None."""
        if not self.enabled:
            return None
        npz_path, meta_path = self._paths(key)
        if not npz_path.exists():
            return None
        try:
            with np.load(npz_path) as payload:
                data = {name: payload[name] for name in
                        ("energies", "wavefunctions", "wells", "bands")}
            meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
            if meta.get("format") != _FORMAT_VERSION:
                raise KeyError("format")
            data["meta"] = meta
            return data
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            raise CacheCorruptionError(f"cache entry {key} unreadable: {exc}") from exc

    def store_eigen(self, key: str, energies, wavefunctions, wells, bands, meta: dict):
        if not self.enabled:
            return
        npz_path, meta_path = self._paths(key)
        if npz_path.exists():
            return  # write-once
        self._atomic_write(npz_path, lambda fh: np.savez(
            fh, energies=energies, wavefunctions=wavefunctions,
            wells=np.asarray(wells), bands=np.asarray(bands)))
        doc = dict(meta, format=_FORMAT_VERSION)
        self._atomic_write(meta_path, lambda fh: fh.write(
            json.dumps(doc, sort_keys=True).encode()))

    def _atomic_write(self, path: Path, writer):
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                writer(fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

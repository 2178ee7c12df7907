"""Binary ``.cplx`` arrays with JSON sidecars.

A ``.cplx`` file is a flat run of little-endian float64 ``(re, im)`` pairs in
row-major order.  The sidecar ``<name>.cplx.json`` carries the shape and a
``kind`` tag together with whatever metadata the writer supplies.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import GridFunction, Spectrum, TorusGrid

_DTYPE = np.dtype("<c16")


def write_cplx(path, array, meta: dict) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(array, dtype=complex))
    arr.astype(_DTYPE).tofile(path)
    side = dict(meta)
    side["shape"] = list(arr.shape)
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
    return path


def read_cplx(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    arr = np.fromfile(path, dtype=_DTYPE).astype(complex)
    return arr.reshape(meta["shape"]), meta


def save_grid_function(path, u: GridFunction) -> Path:
    return write_cplx(path, u.values, {"kind": "samples", **u.grid.to_dict()})


def save_spectrum(path, s: Spectrum) -> Path:
    return write_cplx(path, s.coefficients, {"kind": "spectrum", **s.grid.to_dict()})


def load(path):
    """Load a samples or spectrum file back into its grid object."""
    arr, meta = read_cplx(path)
    kind = meta.get("kind")
    if kind in ("samples", "spectrum"):
        grid = TorusGrid(meta["n"], meta["M"])
        cls = GridFunction if kind == "samples" else Spectrum
        return cls(grid, arr.ravel())
    return arr, meta

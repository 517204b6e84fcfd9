"""Binary array containers: a JSON header terminated by a NUL byte followed
by a raw little-endian payload.

`.mod` holds one float64 field over a grid, row-major with depth fastest;
`.fwd` holds one complex128 data cube in (frequency, source, receiver)
C-order with the acquisition embedded in the header.  Writers are
deterministic (sorted keys, no timestamps) so identical inputs produce
byte-identical files.
"""

import hashlib
import json

import numpy as np

from .grid import Grid2D
from .survey import Acquisition, DataCube

_SEP = b"\0"


def _write(path, header: dict, payload: bytes):
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(blob)
        f.write(_SEP)
        f.write(payload)


def _read(path):
    with open(path, "rb") as f:
        blob = f.read()
    pos = blob.index(_SEP)
    header = json.loads(blob[:pos].decode("utf-8"))
    return header, blob[pos + 1:]


def _grid_meta(grid: Grid2D) -> dict:
    return {"nx": grid.nx, "nz": grid.nz, "h": grid.h, "origin": list(grid.origin)}


def grid_from_meta(meta: dict) -> Grid2D:
    return Grid2D(nx=meta["nx"], nz=meta["nz"], h=meta["h"], origin=tuple(meta["origin"]))


def write_mod(path, values: np.ndarray, grid: Grid2D = None, kind: str = "field",
              units: str = "", extra: dict = None):
    """Write one float64 array; `kind` tags the payload (model, mask, field,
    alpha, ...)."""
    values = np.ascontiguousarray(values, dtype="<f8")
    header = {
        "container": "mod",
        "version": 1,
        "kind": kind,
        "dtype": "<f8",
        "order": "C",
        "shape": list(values.shape),
        "axes": ["x", "z"] if values.ndim == 2 else ["i"],
        "units": units,
    }
    if grid is not None:
        header["grid"] = _grid_meta(grid)
    if extra:
        header["extra"] = extra
    _write(path, header, values.tobytes())


def read_mod(path):
    """Returns (values, header); values reshaped per the header."""
    header, payload = _read(path)
    if header.get("container") != "mod":
        raise ValueError(f"{path} is not a .mod container")
    values = np.frombuffer(payload, dtype="<f8").reshape(header["shape"]).copy()
    return values, header


def acquisition_meta(acq: Acquisition) -> dict:
    return {
        "sources": acq.sources.tolist(),
        "receivers": acq.receivers.tolist(),
        "frequencies": acq.frequencies.tolist(),
        "bands": [list(b) for b in acq.bands],
    }


def acquisition_from_meta(meta: dict) -> Acquisition:
    return Acquisition(sources=meta["sources"], receivers=meta["receivers"],
                       frequencies=meta["frequencies"], bands=meta["bands"])


def write_fwd(path, cube: DataCube, f_peak: float, provenance: dict = None):
    """Write a data cube with its acquisition, weighting and provenance
    (seed / SNR of any injected noise)."""
    values = np.ascontiguousarray(cube.values, dtype="<c16")
    header = {
        "container": "fwd",
        "version": 1,
        "dtype": "<c16",
        "order": "C",
        "shape": list(values.shape),
        "axes": ["frequency", "source", "receiver"],
        "acquisition": acquisition_meta(cube.acquisition),
        "weighting": {"f_peak": f_peak},
        "provenance": provenance or {},
    }
    _write(path, header, values.tobytes())


def read_fwd(path):
    """Returns (cube, header)."""
    header, payload = _read(path)
    if header.get("container") != "fwd":
        raise ValueError(f"{path} is not a .fwd container")
    acq = acquisition_from_meta(header["acquisition"])
    values = np.frombuffer(payload, dtype="<c16").reshape(header["shape"]).copy()
    return DataCube(acquisition=acq, values=values), header


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()

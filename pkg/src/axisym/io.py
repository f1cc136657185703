"""Realization and table writers.

Binary realization layout (little-endian)::

    offset  size  field
    0       8     magic b"AXSYMRL1"
    8       4     n_colat (uint32)
    12      4     n_lon (uint32)
    16      8     seed (uint64)
    24      4     truncation N (uint32)
    28      4     reserved, zero
    32      ...   n_colat * n_lon float64 values, row-major (colatitude major)

CSV realizations have columns ``colat,lon,value`` (radians), one row per
grid point in the same order. Floats use the shortest repr that round-trips.
"""

from __future__ import annotations

import csv
import hashlib
import struct
from pathlib import Path

import numpy as np

from .sampler import Realization

MAGIC = b"AXSYMRL1"
HEADER = struct.Struct("<8sIIQI4x")
assert HEADER.size == 32


def write_realization_binary(path, real: Realization) -> None:
    n_colat, n_lon = real.values.shape
    seed = 0 if real.seed is None else int(real.seed)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n_colat, n_lon, seed, real.truncation))
        fh.write(np.ascontiguousarray(real.values, dtype="<f8").tobytes())


def read_realization_binary(path) -> tuple[dict, np.ndarray]:
    data = Path(path).read_bytes()
    magic, n_colat, n_lon, seed, N = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a realization file")
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size)
    if values.size != n_colat * n_lon:
        raise ValueError(f"{path}: truncated payload")
    header = {"n_colat": n_colat, "n_lon": n_lon, "seed": seed, "truncation": N}
    return header, values.reshape(n_colat, n_lon)


def write_realization_csv(path, real: Realization) -> None:
    colats = real.grid.colats
    lons = real.grid.lons
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["colat", "lon", "value"])
        for i, L in enumerate(colats):
            row = real.values[i]
            w.writerows(zip([float(L)] * lons.size, lons.tolist(), row.tolist()))


def write_table(path, header: list[str], columns: list) -> None:
    cols = [np.asarray(c).tolist() for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(zip(*cols))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

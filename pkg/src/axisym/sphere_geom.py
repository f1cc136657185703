"""Points, grids and the great-circle metric on the unit sphere.

Coordinates are colatitude ``colat`` in [0, pi] (measured from the north
pole) and longitude ``lon`` in [0, 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpherePoint:
    colat: float
    lon: float

    def __post_init__(self):
        if not (0.0 <= self.colat <= math.pi):
            raise ValueError(f"colatitude {self.colat!r} outside [0, pi]")
        if not (0.0 <= self.lon < TWO_PI):
            raise ValueError(f"longitude {self.lon!r} outside [0, 2*pi)")

    @classmethod
    def normalized(cls, colat: float, lon: float) -> "SpherePoint":
        """Build a point, reducing ``lon`` modulo 2*pi."""
        lon = math.fmod(lon, TWO_PI)
        if lon < 0.0:
            lon += TWO_PI
        if lon >= TWO_PI:  # fmod of values just below a multiple can round up
            lon = 0.0
        return cls(colat, lon)

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float) -> "SpherePoint":
        """Geographic latitude/longitude in degrees to a colatitude point."""
        return cls.normalized(math.radians(90.0 - lat_deg), math.radians(lon_deg))


@dataclass(frozen=True)
class LatLonGrid:
    colats: np.ndarray
    lons: np.ndarray

    def __post_init__(self):
        colats = np.asarray(self.colats, dtype=float).ravel()
        lons = np.asarray(self.lons, dtype=float).ravel()
        for name, arr, hi, closed in (("colats", colats, math.pi, True),
                                      ("lons", lons, TWO_PI, False)):
            if arr.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            upper_ok = arr[-1] <= hi if closed else arr[-1] < hi
            if arr[0] < 0.0 or not upper_ok:
                raise ValueError(f"{name} out of range")
        colats.setflags(write=False)
        lons.setflags(write=False)
        object.__setattr__(self, "colats", colats)
        object.__setattr__(self, "lons", lons)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.colats.size, self.lons.size)

    @property
    def size(self) -> int:
        return self.colats.size * self.lons.size

    def colat_index(self, colat: float, atol: float = 1e-12) -> int:
        hits = np.flatnonzero(np.abs(self.colats - colat) <= atol)
        if hits.size == 0:
            raise ValueError(f"colatitude {colat!r} is not on the grid")
        return int(hits[0])

    def lon_index(self, lon: float, atol: float = 1e-12) -> int:
        hits = np.flatnonzero(np.abs(self.lons - lon) <= atol)
        if hits.size == 0:
            raise ValueError(f"longitude {lon!r} is not on the grid")
        return int(hits[0])

    def index_of(self, p: SpherePoint) -> tuple[int, int]:
        return self.colat_index(p.colat), self.lon_index(p.lon)

    def __eq__(self, other):
        if not isinstance(other, LatLonGrid):
            return NotImplemented
        return (np.array_equal(self.colats, other.colats)
                and np.array_equal(self.lons, other.lons))

    def __hash__(self):
        return hash((self.colats.tobytes(), self.lons.tobytes()))


def great_circle_distance_arrays(colat1, colat2, dlon):
    """Vectorized great-circle distance from colatitudes and a longitude lag."""
    colat1 = np.asarray(colat1, dtype=float)
    colat2 = np.asarray(colat2, dtype=float)
    dlon = np.asarray(dlon, dtype=float)
    h = (np.sin(0.5 * (colat1 - colat2)) ** 2
         + np.sin(colat1) * np.sin(colat2) * np.sin(0.5 * dlon) ** 2)
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def great_circle_distance(p1: SpherePoint, p2: SpherePoint) -> float:
    """Length of the shortest arc joining ``p1`` and ``p2``, in [0, pi]."""
    return float(great_circle_distance_arrays(p1.colat, p2.colat, p1.lon - p2.lon))


def uniform_grid(n_colat: int, n_lon: int) -> LatLonGrid:
    """Cell-midpoint colatitudes in (0, pi) and equispaced longitudes from 0."""
    if n_colat < 1 or n_lon < 1:
        raise ValueError("grid counts must be positive")
    colats = (np.arange(n_colat) + 0.5) * (math.pi / n_colat)
    lons = np.arange(n_lon) * (TWO_PI / n_lon)
    return LatLonGrid(colats, lons)

"""Legendre polynomials and fully normalized associated Legendre functions.

The normalized functions are

    Pt_nm(x) = sqrt((2n+1)/(4 pi) * (n-m)!/(n+m)!) * P_nm(x)

with the Condon-Shortley phase, P_11(x) = -(1-x^2)^(1/2). They satisfy

    int_0^pi Pt_nm(cos L) Pt_n'm(cos L) sin L dL = delta_nn' / (2 pi)

and are evaluated by recurrence on the normalized values themselves, so no
factorial is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .sphere_geom import SpherePoint, great_circle_distance

INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0) or np.any(np.isnan(x)):
        raise ValueError("argument must lie in [-1, 1]")
    return x


def legendre_p(n: int, x):
    """Legendre polynomial P_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = _check_x(x)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p if p.ndim else float(p)


def legendre_p_all(n_max: int, x) -> np.ndarray:
    """P_0..P_{n_max} at ``x``, shape ``(n_max + 1, *x.shape)``."""
    x = _check_x(x)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


def ptilde_columns(max_degree: int, x, max_order: int | None = None
                   ) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(m, col)`` with ``col[n - m] = Pt_nm(x)`` for n = m..max_degree.

    ``x`` may be an array; each ``col`` has shape ``(max_degree - m + 1, *x.shape)``.
    Orders are produced in increasing m up to ``max_order`` (default
    ``max_degree``), carrying the diagonal seed along.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    x = _check_x(x)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.full(x.shape, INV_SQRT_4PI)
    N = max_degree
    last = N if max_order is None else min(max_order, N)
    for m in range(last + 1):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        col = np.empty((N - m + 1,) + x.shape)
        col[0] = pmm
        if m < N:
            col[1] = math.sqrt(2 * m + 3) * x * pmm
        for n in range(m + 2, N + 1):
            a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
            b = math.sqrt(((n - 1) ** 2 - m * m) / (4 * (n - 1) ** 2 - 1))
            col[n - m] = a * (x * col[n - m - 1] - b * col[n - m - 2])
        yield m, col


@dataclass(frozen=True)
class LegendreTable:
    """Triangular table ``values[n, m] = Pt_nm(x)`` for 0 <= m <= n <= max_degree.

    Entries with m > n are zero. When ``argument`` is an array the trailing
    axes of ``values`` follow its shape.
    """

    max_degree: int
    argument: np.ndarray | float
    values: np.ndarray

    def __getitem__(self, nm):
        n, m = nm
        if not 0 <= m <= n <= self.max_degree:
            raise IndexError(f"(n, m) = {nm} outside the table")
        return self.values[n, m]


def ptilde_table(max_degree: int, x) -> LegendreTable:
    x_arr = _check_x(x)
    N = max_degree
    values = np.zeros((N + 1, N + 1) + x_arr.shape)
    for m, col in ptilde_columns(N, x_arr):
        values[m:, m] = col
    arg = x_arr if x_arr.ndim else float(x_arr)
    return LegendreTable(N, arg, values)


def addition_theorem_check(n: int, p1: SpherePoint, p2: SpherePoint) -> float:
    """|P_n(cos d) - sum over orders| for the addition theorem at two points.

    The right-hand side uses (n-m)!/(n+m)! P_nm P_nm = 4 pi/(2n+1) Pt_nm Pt_nm.
    """
    lhs = legendre_p(n, math.cos(great_circle_distance(p1, p2)))
    t1 = ptilde_table(n, math.cos(p1.colat)).values[n]
    t2 = ptilde_table(n, math.cos(p2.colat)).values[n]
    m = np.arange(1, n + 1)
    dlon = p1.lon - p2.lon
    rhs = t1[0] * t2[0] + 2.0 * np.sum(np.cos(m * dlon) * t1[1:] * t2[1:])
    rhs *= 4.0 * math.pi / (2 * n + 1)
    return abs(lhs - rhs)

"""Truncated covariance of an axially symmetric process.

For a spec with truncation N,

    C(L1, L2, dlon) = sum_{n,n'} f_0(n,n') Pt_n0(cos L1) Pt_n'0(cos L2)
        + 2 sum_{m=1}^N sum_{n,n'=m}^N {f_m(n,n') cos(m dlon) - g_m(n,n') sin(m dlon)}
                                       Pt_nm(cos L1) Pt_n'm(cos L2)

is cov{Z(L1, l1), Z(L2, l2)} with dlon = l1 - l2 for the process whose
coefficients satisfy cov{a_nm, b_n'm} = g_m(n,n')/2 (see ``sampler``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .legendre import legendre_p_all, ptilde_columns
from .sphere_geom import SpherePoint
from .spectrum import Kronecker, SpectrumModel, XiFamily, fg_matrices


@dataclass(frozen=True)
class CovarianceSpec:
    model: SpectrumModel
    truncation: int

    def __post_init__(self):
        if self.truncation < 0:
            raise ValueError("truncation must be >= 0")


@lru_cache(maxsize=32)
def _order_blocks(model: SpectrumModel, N: int):
    """(m, F_m, G_m, F_is_diagonal) for every order with lambda_m != 0."""
    lam = model.lam.values(N)
    diag = isinstance(model.rho, Kronecker)
    blocks = []
    for m in range(N + 1):
        if lam[m] == 0.0:
            continue
        F, G = fg_matrices(model, m, N)
        has_g = m >= 1 and bool(np.any(G))
        blocks.append((m, np.diag(F).copy() if diag else F, G if has_g else None, diag))
    return tuple(blocks)


def order_terms(spec: CovarianceSpec, colat1, colat2):
    """Per-order quadratic forms for paired colatitudes.

    Returns ``(orders, Qf, Qg)`` where ``Qf[i, p] = u_m(L1_p)^T F_m u_m(L2_p)``
    for the i-th retained order m, and likewise for G.
    """
    L1 = np.atleast_1d(np.asarray(colat1, dtype=float))
    L2 = np.atleast_1d(np.asarray(colat2, dtype=float))
    N = spec.truncation
    blocks = _order_blocks(spec.model, N)
    wanted = {b[0]: b for b in blocks}
    orders = np.array([b[0] for b in blocks], dtype=int)
    Qf = np.zeros((len(blocks), L1.size))
    Qg = np.zeros((len(blocks), L1.size))
    i = 0
    top = int(orders[-1]) if orders.size else -1
    if top < 0:
        return orders, Qf, Qg
    for (m, u1), (_, u2) in zip(ptilde_columns(N, np.cos(L1), top),
                                ptilde_columns(N, np.cos(L2), top)):
        if m not in wanted:
            continue
        _, F, G, diag = wanted[m]
        if diag:
            Qf[i] = np.einsum("k,kp,kp->p", F, u1, u2)
        else:
            Qf[i] = np.einsum("kp,kp->p", u1, F @ u2)
        if G is not None:
            Qg[i] = np.einsum("kp,kp->p", u1, G @ u2)
        i += 1
    return orders, Qf, Qg


def cov(spec: CovarianceSpec, L1, L2, dlon):
    """Covariance at colatitudes ``L1``, ``L2`` and longitude lag ``dlon``.

    Inputs broadcast; the Legendre work is done once per distinct
    ``(L1, L2)`` pair.
    """
    L1, L2, dlon = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (L1, L2, dlon)))
    shape = L1.shape
    pairs = np.stack([L1.ravel(), L2.ravel()], axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    orders, Qf, Qg = order_terms(spec, uniq[:, 0], uniq[:, 1])
    d = dlon.ravel()
    out = np.zeros(d.size)
    inv = inv.ravel()
    for i, m in enumerate(orders):
        if m == 0:
            out += Qf[i][inv]
        else:
            out += 2.0 * (Qf[i][inv] * np.cos(m * d) - Qg[i][inv] * np.sin(m * d))
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def cov_points(spec: CovarianceSpec, p1: SpherePoint, p2: SpherePoint) -> float:
    return cov(spec, p1.colat, p2.colat, p1.lon - p2.lon)


def covariance_matrix(spec: CovarianceSpec, points) -> np.ndarray:
    colat = np.array([p.colat for p in points])
    lon = np.array([p.lon for p in points])
    return cov(spec, colat[:, None], colat[None, :], lon[:, None] - lon[None, :])


def cov_isotropic(xi: XiFamily, N: int, d):
    """Truncated Schoenberg series sum_n xi_n (2n+1)/(4 pi) P_n(cos d)."""
    d = np.asarray(d, dtype=float)
    P = legendre_p_all(N, np.clip(np.cos(d), -1.0, 1.0))
    n = np.arange(N + 1)
    w = xi.values(N) * (2 * n + 1) / (4.0 * math.pi)
    out = np.tensordot(w, P, axes=1)
    return float(out) if out.ndim == 0 else out


def variogram(spec: CovarianceSpec, L, dlon):
    """Semivariogram along the parallel at colatitude ``L``: C(L,L,0) - C(L,L,dlon)."""
    dlon = np.asarray(dlon, dtype=float)
    sill = cov(spec, L, L, 0.0)
    out = sill - cov(spec, L, L, dlon)
    return float(out) if np.ndim(out) == 0 else out

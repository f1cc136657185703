"""Seeded sampling of Karhunen-Loeve coefficients and grid synthesis.

Coefficient covariances (m >= 1 halved, m = 0 not):

    cov{a_n0, a_n'0} = f_0(n, n')
    cov{a_nm, a_n'm} = cov{b_nm, b_n'm} = f_m(n, n') / 2
    cov{a_nm, b_n'm} = -cov{b_nm, a_n'm} = g_m(n, n') / 2

Orders are independent. The field is

    Z_N(L, l) = sum_n a_n0 Pt_n0(cos L)
                + 2 sum_{m>=1} sum_{n>=m} (a_nm cos(m l) + b_nm sin(m l)) Pt_nm(cos L).

Seeds
-----
Replicate ``r`` of an ensemble with base seed ``s`` uses the integer seed
``derive_seed(s, r)``: the first 64 bits of ``SeedSequence(s, spawn_key=(r,))``.
Within a draw with seed ``t``, order m reads standard normals from
``PCG64(SeedSequence(t, spawn_key=(m,)))``. Order 0 consumes ``N + 1`` values
for a_00..a_N0; order m >= 1 consumes ``2(N - m + 1)`` values interleaved as
(a_mm, b_mm, a_{m+1,m}, b_{m+1,m}, ...). The streams depend only on the
seed and N, never on the model, so a fixed seed gives comparable fields
across models.

For the triangular (Cholesky) factors used here, the draw at truncation N
restricted to degrees n <= N' equals the draw at N' with the same seed.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .legendre import ptilde_columns
from .sphere_geom import LatLonGrid
from .spectrum import (TOL_PSD, AdmissibilityError, Kronecker, SpectrumModel,
                       gamma_block, lag_matrices)

log = logging.getLogger(__name__)

JITTERS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


def derive_seed(base_seed: int, index: int) -> int:
    state = np.random.SeedSequence(base_seed, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def order_stream(seed: int, m: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(m,))))


def _jittered_cholesky(W: np.ndarray) -> np.ndarray | None:
    scale = float(np.mean(np.diag(W))) if W.size else 0.0
    eye = np.eye(W.shape[0])
    for eps in JITTERS:
        try:
            return np.linalg.cholesky(W + eps * scale * eye)
        except np.linalg.LinAlgError:
            continue
    return None


def _clipped_factor(W: np.ndarray, m: int) -> np.ndarray:
    """Eigen-decomposition factor with small negative eigenvalues set to zero."""
    vals, vecs = np.linalg.eigh(W)
    scale = float(np.mean(np.diag(W)))
    if vals[0] < -TOL_PSD * scale:
        raise AdmissibilityError(
            f"covariance factorization failed for order m={m} "
            f"(min eigenvalue {vals[0]:.3e})", m, float(vals[0]))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def interleaved_lag_matrix(model: SpectrumModel, k: int) -> np.ndarray:
    """Unit-scale joint correlation of (a_0, b_0, a_1, b_1, ...) over k degrees."""
    R, K = lag_matrices(model, k)
    W = np.empty((2 * k, 2 * k))
    W[0::2, 0::2] = R
    W[1::2, 1::2] = R
    W[0::2, 1::2] = K
    W[1::2, 0::2] = K.T
    return W


@dataclass(frozen=True)
class CoefficientDraw:
    """One draw of a_nm (0 <= m <= n <= N) and b_nm (1 <= m <= n <= N).

    ``a[n, m]`` and ``b[n, m]``; entries with m > n and the column b[:, 0]
    are zero.
    """

    truncation: int
    a: np.ndarray
    b: np.ndarray
    seed: int | None
    model: SpectrumModel

    def __post_init__(self):
        shape = (self.truncation + 1, self.truncation + 1)
        if self.a.shape != shape or self.b.shape != shape:
            raise ValueError("coefficient arrays must be (N+1, N+1)")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("coefficients must be finite")

    def truncate(self, N: int) -> "CoefficientDraw":
        """Coefficients with n <= N (the partial sum used by a truncated expansion)."""
        if not 0 <= N <= self.truncation:
            raise ValueError("new truncation must be within the draw")
        return CoefficientDraw(N, self.a[: N + 1, : N + 1].copy(),
                               self.b[: N + 1, : N + 1].copy(), self.seed, self.model)

    def tail(self, N: int) -> "CoefficientDraw":
        """Coefficients with n > N only; synthesizes Z_full - Z_N exactly."""
        a = self.a.copy()
        b = self.b.copy()
        a[: N + 1] = 0.0
        b[: N + 1] = 0.0
        return CoefficientDraw(self.truncation, a, b, self.seed, self.model)


class CoefficientSampler:
    """Factorizes the per-order covariance once and draws coefficients by seed."""

    def __init__(self, model: SpectrumModel, truncation: int):
        if truncation < 0:
            raise ValueError("truncation must be >= 0")
        self.model = model
        self.N = N = truncation
        self.sqrt_xi = np.sqrt(model.xi.values(N))
        self.lam = model.lam.values(N)
        self.diagonal = isinstance(model.rho, Kronecker) and model.kappa == 0.0
        self._full = None
        self._full0 = None
        self._per_order: dict[int, np.ndarray] = {}
        if not self.diagonal:
            self._factorize()

    def _factorize(self):
        N = self.N
        R, _ = lag_matrices(self.model, N + 1)
        self._full0 = _jittered_cholesky(R)
        if self._full0 is None:
            gamma_block(self.model, 0, N)
            self._full0 = _clipped_factor(R, 0)
        if N == 0:
            return
        W = interleaved_lag_matrix(self.model, N)  # orders m >= 1 have at most N degrees
        self._full = _jittered_cholesky(W)
        if self._full is None:
            log.warning("joint factorization failed; falling back to per-order factors")
            for m in range(1, N + 1):
                if self.lam[m] == 0.0:
                    continue
                k = N - m + 1
                Wm = W[: 2 * k, : 2 * k]
                Lm = _jittered_cholesky(Wm)
                if Lm is None:
                    gamma_block(self.model, m, N)  # raises if outside tolerance
                    Lm = _clipped_factor(Wm, m)
                self._per_order[m] = Lm

    def _factor(self, m: int) -> np.ndarray:
        k = self.N - m + 1
        if m == 0:
            return self._full0[:k, :k]
        if self._full is not None:
            return self._full[: 2 * k, : 2 * k]
        return self._per_order[m]

    def draw(self, seed: int) -> CoefficientDraw:
        N = self.N
        a = np.zeros((N + 1, N + 1))
        b = np.zeros((N + 1, N + 1))
        for m in range(N + 1):
            lam = self.lam[m]
            if lam == 0.0:
                continue
            k = N - m + 1
            s = self.sqrt_xi[m:]
            rng = order_stream(seed, m)
            if m == 0:
                z = rng.standard_normal(k)
                if not self.diagonal:
                    z = self._factor(0) @ z
                a[:, 0] = math.sqrt(lam) * s * z
                continue
            z = rng.standard_normal(2 * k)
            if not self.diagonal:
                z = self._factor(m) @ z
            c = math.sqrt(lam / 2.0)
            a[m:, m] = c * s * z[0::2]
            b[m:, m] = c * s * z[1::2]
        return CoefficientDraw(N, a, b, seed, self.model)


def draw_coefficients(model: SpectrumModel, N: int, seed: int) -> CoefficientDraw:
    return CoefficientSampler(model, N).draw(seed)


class SynthesisBasis:
    """Legendre columns and longitude harmonics for a fixed grid and truncation."""

    def __init__(self, grid: LatLonGrid, truncation: int, max_order: int | None = None):
        self.grid = grid
        self.N = N = truncation
        self.max_order = N if max_order is None else min(max_order, N)
        self.columns = [col for _, col in
                        ptilde_columns(N, np.cos(grid.colats), self.max_order)]
        m = np.arange(N + 1)[:, None]
        w = np.where(m == 0, 1.0, 2.0)
        self.cos = w * np.cos(m * grid.lons[None, :])
        self.sin = w * np.sin(m * grid.lons[None, :])
        self.sin[0] = 0.0

    def field(self, a: np.ndarray, b: np.ndarray, n_max: int | None = None) -> np.ndarray:
        """Evaluate the expansion with coefficient arrays ``a[n, m]``, ``b[n, m]``
        restricted to degrees n <= n_max."""
        N = self.N if n_max is None else n_max
        if a.shape[0] - 1 < N:
            raise ValueError("coefficients do not reach the requested degree")
        n_colat = self.grid.colats.size
        A = np.zeros((n_colat, N + 1))
        B = np.zeros((n_colat, N + 1))
        for m in range(N + 1):
            am = a[m: N + 1, m]
            bm = b[m: N + 1, m]
            if not am.any() and not bm.any():
                continue
            if m > self.max_order:
                raise ValueError(f"basis stops at order {self.max_order}, coefficients at m={m}")
            P = self.columns[m][: N - m + 1]
            A[:, m] = am @ P
            if m:
                B[:, m] = bm @ P
        return A @ self.cos[: N + 1] + B @ self.sin[: N + 1]


@dataclass(frozen=True)
class Realization:
    grid: LatLonGrid
    values: np.ndarray
    seed: int | None
    truncation: int
    model: SpectrumModel

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError("values shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("realization contains non-finite values")


def highest_order(model: SpectrumModel, N: int) -> int:
    """Largest m <= N with lambda_m != 0 (0 if none)."""
    nz = np.flatnonzero(model.lam.values(N))
    return int(nz[-1]) if nz.size else 0


def synthesize(draw: CoefficientDraw, grid: LatLonGrid,
               basis: SynthesisBasis | None = None) -> Realization:
    top = highest_order(draw.model, draw.truncation)
    if (basis is None or basis.grid != grid or basis.N < draw.truncation
            or basis.max_order < top):
        basis = SynthesisBasis(grid, draw.truncation, top)
    values = basis.field(draw.a, draw.b, draw.truncation)
    return Realization(grid, values, draw.seed, draw.truncation, draw.model)


def ensemble(model: SpectrumModel, N: int, grid: LatLonGrid, n_reps: int,
             base_seed: int, threads: int = 1) -> Iterator[Realization]:
    """``n_reps`` realizations with seeds ``derive_seed(base_seed, r)``.

    Output order and values do not depend on ``threads``.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    sampler = CoefficientSampler(model, N)
    basis = SynthesisBasis(grid, N, highest_order(model, N))

    def one(r: int) -> Realization:
        return synthesize(sampler.draw(derive_seed(base_seed, r)), grid, basis)

    if threads <= 1:
        for r in range(n_reps):
            yield one(r)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(one, range(n_reps))

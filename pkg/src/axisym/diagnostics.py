"""Empirical checks of simulated fields: variograms, covariances, truncation error."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .sampler import (CoefficientSampler, Realization, SynthesisBasis, derive_seed,
                      highest_order)
from .sphere_geom import TWO_PI, LatLonGrid, SpherePoint
from .spectrum import DecayCertificate, LegendreMatern, SpectrumModel


@dataclass(frozen=True)
class VariogramEstimate:
    """Method-of-moments semivariogram along one parallel.

    ``gamma_reps[r, k]`` is replicate r's estimate in bin k and
    ``gamma_hat`` its mean over replicates. Bins without pairs have
    ``n_pairs == 0`` and NaN estimates.
    """

    colat: float
    lags: np.ndarray
    gamma_hat: np.ndarray
    n_pairs: np.ndarray
    gamma_reps: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.n_pairs > 0

    def envelope(self, kind: str = "minmax") -> tuple[np.ndarray, np.ndarray]:
        if kind == "minmax":
            return self.gamma_reps.min(axis=0), self.gamma_reps.max(axis=0)
        if kind == "quantile":
            lo, hi = np.quantile(self.gamma_reps, [0.025, 0.975], axis=0)
            return lo, hi
        raise ValueError("kind must be 'minmax' or 'quantile'")


def default_lag_edges(lons: np.ndarray) -> np.ndarray:
    """Bins of width equal to the longitude spacing, centred on its multiples, up to pi."""
    step = float(np.min(np.diff(lons))) if lons.size > 1 else math.pi
    k_max = int(math.floor(math.pi / step + 1e-9))
    return (np.arange(k_max + 1) + 0.5) * step


def _parallel_values(realizations: Iterable[Realization], colat: float):
    grid = None
    rows = []
    for real in realizations:
        if grid is None:
            grid = real.grid
            i = grid.colat_index(colat)
        elif real.grid != grid:
            raise ValueError("realizations must share one grid")
        rows.append(real.values[i])
    if grid is None:
        raise ValueError("no realizations given")
    return grid, np.array(rows)


def empirical_variogram(realizations: Iterable[Realization], colat: float,
                        lag_bins: Sequence[float] | None = None) -> VariogramEstimate:
    """Average of (Z(L, l_i) - Z(L, l_j))^2 / 2 over point pairs in each lag bin.

    Lags are circular, min(|l_i - l_j|, 2 pi - |l_i - l_j|). ``lag_bins`` are
    bin edges; by default one bin per multiple of the longitude spacing.
    """
    grid, Z = _parallel_values(realizations, colat)
    lons = grid.lons
    edges = default_lag_edges(lons) if lag_bins is None else np.asarray(lag_bins, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("lag bin edges must be increasing with at least two entries")
    i, j = np.triu_indices(lons.size, k=1)
    d = np.abs(lons[i] - lons[j])
    lag = np.minimum(d, TWO_PI - d)
    which = np.searchsorted(edges, lag, side="right") - 1
    keep = (which >= 0) & (which < edges.size - 1) & (lag < edges[-1])
    i, j, which = i[keep], j[keep], which[keep]
    n_bins = edges.size - 1
    order = np.argsort(which, kind="stable")
    i, j, which = i[order], j[order], which[order]
    n_pairs = np.bincount(which, minlength=n_bins)
    filled = np.flatnonzero(n_pairs)
    starts = np.searchsorted(which, filled)
    reps = np.full((Z.shape[0], n_bins), np.nan)
    for lo in range(0, Z.shape[0], 64):  # bounded memory: 64 replicates x all pairs
        sq = 0.5 * (Z[lo: lo + 64, i] - Z[lo: lo + 64, j]) ** 2
        if filled.size:
            reps[lo: lo + 64, filled] = np.add.reduceat(sq, starts, axis=1) / n_pairs[filled]
    centers = 0.5 * (edges[:-1] + edges[1:])
    return VariogramEstimate(float(grid.colats[grid.colat_index(colat)]), centers,
                             reps.mean(axis=0), n_pairs, reps)


def mc_covariance(realizations: Iterable[Realization], p1: SpherePoint,
                  p2: SpherePoint) -> tuple[float, float]:
    """Sample covariance of Z(p1), Z(p2) across replicates and its standard error."""
    xs, ys = [], []
    grid = None
    for real in realizations:
        if grid is None:
            grid = real.grid
            i1, i2 = grid.index_of(p1), grid.index_of(p2)
        xs.append(real.values[i1])
        ys.append(real.values[i2])
    return sample_covariance(np.array(xs), np.array(ys))


def sample_covariance(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = x.size
    if n < 2:
        raise ValueError("need at least two replicates")
    w = (x - x.mean()) * (y - y.mean())
    est = float(w.sum() / (n - 1))
    se = float(w.std(ddof=1) / math.sqrt(n)) * n / (n - 1)
    return est, se


# --- truncation error --------------------------------------------------------

def l2_error_theoretical(model: SpectrumModel, N: int, N_max: int) -> float:
    """Squared L2 error of the degree-N truncation, tail summed to N_max:

        sum_{n=N+1}^{N_max} [ f_0(n,n) + 2 sum_{m=1}^n f_m(n,n) ]
    """
    if N >= N_max:
        raise ValueError("need N < N_max")
    xi = model.xi.values(N_max)
    lam = model.lam.values(N_max)
    # lambda_0 + 2 * (lambda_1 + ... + lambda_n)
    cum = lam[0] + 2.0 * np.concatenate([[0.0], np.cumsum(lam[1:])])
    n = np.arange(N + 1, N_max + 1)
    rho0 = float(model.rho(0.0))
    return float(np.sum(xi[n] * rho0 * cum[n]))


def decay_exponent(model: SpectrumModel, certificate: DecayCertificate | None = None) -> float | None:
    if certificate is not None:
        return certificate.beta
    if isinstance(model.xi, LegendreMatern):
        return model.xi.beta
    return None


@dataclass(frozen=True)
class ConvergenceStudy:
    """Mean over replicates of max_grid |Z_ref - Z_N| ** power, per truncation N.

    With ``power=2`` the statistic is comparable with the squared L2 rate
    N^-(beta-2); with ``power=1`` the expected slope is half that.
    """

    truncations: np.ndarray
    errors: np.ndarray
    fitted_slope: float
    power: int
    per_replicate: np.ndarray
    N_ref: int
    l2_theory: np.ndarray
    beta: float | None

    def __post_init__(self):
        if np.any(np.diff(self.truncations) <= 0):
            raise ValueError("truncations must be strictly increasing")

    @property
    def theoretical_slope(self) -> float | None:
        if self.beta is None:
            return None
        return -(self.beta - 2.0) * self.power / 2.0

    def theory_bound(self) -> np.ndarray | None:
        """c N^-(beta-2) with the smallest c bounding the tail sums at these N."""
        if self.beta is None:
            return None
        rate = self.truncations ** (-(self.beta - 2.0))
        c = float(np.max(self.l2_theory / rate))
        return c * rate


def fit_loglog_slope(x, y) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def convergence_study(model: SpectrumModel, N_ref: int, truncations: Sequence[int],
                      grid: LatLonGrid, n_reps: int, base_seed: int, power: int = 2,
                      threads: int = 1, certificate: DecayCertificate | None = None
                      ) -> ConvergenceStudy:
    Ns = np.asarray(sorted(truncations), dtype=int)
    if Ns.size == 0 or Ns[0] < 0 or Ns[-1] >= N_ref:
        raise ValueError("truncations must lie in [0, N_ref)")
    if np.any(np.diff(Ns) <= 0):
        raise ValueError("truncations must be distinct")
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    sampler = CoefficientSampler(model, N_ref)
    basis = SynthesisBasis(grid, N_ref, highest_order(model, N_ref))

    def one(r: int) -> np.ndarray:
        draw = sampler.draw(derive_seed(base_seed, r))
        out = np.empty(Ns.size)
        for k, N in enumerate(Ns):
            tail = draw.tail(int(N))
            out[k] = np.max(np.abs(basis.field(tail.a, tail.b))) ** power
        return out

    if threads <= 1:
        per_rep = np.array([one(r) for r in range(n_reps)])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = np.array(list(pool.map(one, range(n_reps))))
    errors = per_rep.mean(axis=0)
    slope = fit_loglog_slope(Ns, errors) if Ns.size > 1 else float("nan")
    l2 = np.array([l2_error_theoretical(model, int(N), N_ref) for N in Ns])
    return ConvergenceStudy(Ns, errors, slope, power, per_rep, N_ref, l2,
                            decay_exponent(model, certificate))

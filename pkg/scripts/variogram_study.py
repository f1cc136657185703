#!/usr/bin/env python3
"""Empirical against theoretical variograms along four parallels."""

import argparse
import math

import numpy as np
from scipy.stats import spearmanr

from axisym.covariance import CovarianceSpec, cov, variogram
from axisym.diagnostics import empirical_variogram
from axisym.sampler import ensemble
from axisym.spectrum import Indicator, Kronecker, LegendreMatern, SpectrumModel
from axisym.sphere_geom import LatLonGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--alpha", type=int, default=10)
    ap.add_argument("--n-lon", type=int, default=250)
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    model = SpectrumModel(LegendreMatern(100.0, 1.5), Kronecker(), Indicator(args.alpha))
    lats = np.array([60.0, 20.0, -20.0, -60.0])
    grid = LatLonGrid(np.sort(np.radians(90 - lats)),
                      np.arange(args.n_lon) * (2 * math.pi / args.n_lon))
    reals = list(ensemble(model, args.N, grid, args.reps, args.seed, threads=args.threads))
    spec = CovarianceSpec(model, args.N)
    for L in grid.colats:
        est = empirical_variogram(reals, float(L))
        theory = variogram(spec, float(L), est.lags)
        sill = cov(spec, float(L), float(L), 0.0)
        sel = est.valid & (theory > 0.1 * sill)
        rel = np.max(np.abs(est.gamma_hat[sel] / theory[sel] - 1))
        lo, hi = est.envelope("minmax")
        qlo, qhi = est.envelope("quantile")
        r_mm = spearmanr(est.lags, hi - lo)[0]
        r_q = spearmanr(est.lags, qhi - qlo)[0]
        print(f"lat {90 - math.degrees(L):6.1f}: sill {sill:.4e}  max rel err {rel:.3f}  "
              f"Spearman width/lag minmax {r_mm:.3f} quantile {r_q:.3f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Monte-Carlo covariances of simulated fields against the series covariance."""

import argparse
import itertools

import numpy as np

from axisym.covariance import CovarianceSpec, cov
from axisym.diagnostics import sample_covariance
from axisym.sampler import ensemble
from axisym.spectrum import Exponential, Indicator, LegendreMatern, SpectrumModel
from axisym.sphere_geom import LatLonGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=20000)
    ap.add_argument("--N", type=int, default=10)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--phi", type=float, default=1.0)
    ap.add_argument("--alpha", type=int, default=8)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    model = SpectrumModel(LegendreMatern(100.0, 1.5), Exponential(args.phi),
                          Indicator(args.alpha), args.kappa)
    grid = LatLonGrid(np.array([0.7, 1.5, 2.3]), np.array([0.0, 0.25, 1.0]))
    vals = np.array([r.values.ravel() for r in
                     ensemble(model, args.N, grid, args.reps, args.seed)])
    spec = CovarianceSpec(model, args.N)
    coords = [(L, l) for L in grid.colats for l in grid.lons]
    zs = []
    for i, j in itertools.combinations_with_replacement(range(len(coords)), 2):
        (L1, l1), (L2, l2) = coords[i], coords[j]
        est, se = sample_covariance(vals[:, i], vals[:, j])
        zs.append((est - cov(spec, L1, L2, l1 - l2)) / se)
    zs = np.array(zs)
    print(f"{zs.size} point pairs, {args.reps} replicates")
    print(f"max |z| = {np.max(np.abs(zs)):.2f}; mean z = {zs.mean():.3f}; sd z = {zs.std():.3f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Truncation-error rates for the Legendre-Matern example.

Prints, per truncation, the mean max-grid error and its square, with fitted
log-log slopes for both statistics and the squared-L2 tail sum.
"""

import argparse

import numpy as np

from axisym.diagnostics import convergence_study, fit_loglog_slope
from axisym.spectrum import Indicator, Kronecker, LegendreMatern, Ones, SpectrumModel
from axisym.sphere_geom import uniform_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true", help="N_ref=1000, 1000 replicates")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--alpha", default="10", help="integer or 'inf' for lambda = 1")
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    lam = Ones() if args.alpha == "inf" else Indicator(int(args.alpha))
    model = SpectrumModel(LegendreMatern(100.0, 1.5), Kronecker(), lam)
    N_ref = 1000 if args.full else 512
    Ns = [16, 32, 64, 128, 256] if args.full else [16, 32, 64, 128]
    reps = args.reps or (1000 if args.full else 200)
    study = convergence_study(model, N_ref, Ns, uniform_grid(64, 64), reps, args.seed,
                              power=2, threads=args.threads)
    amp = np.sqrt(study.per_replicate).mean(axis=0)
    print(f"N_ref={N_ref} reps={reps} alpha={args.alpha}")
    print(f"{'N':>5} {'mean max err':>14} {'mean sq max err':>16} {'L2 tail':>12}")
    for N, a, e, l2 in zip(study.truncations, amp, study.errors, study.l2_theory):
        print(f"{N:5d} {a:14.6e} {e:16.6e} {l2:12.4e}")
    print(f"slope, mean squared max error: {study.fitted_slope:.3f} "
          f"(theory {study.theoretical_slope:.3f})")
    print(f"slope, mean max error:         {fit_loglog_slope(Ns, amp):.3f} "
          f"(theory {study.theoretical_slope / 2:.3f})")
    print(f"slope, L2 tail sum:            {fit_loglog_slope(Ns, study.l2_theory):.3f}")


if __name__ == "__main__":
    main()

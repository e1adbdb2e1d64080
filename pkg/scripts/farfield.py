"""Fit the far-field coefficients of a 2D minimizer in growing boxes."""

import argparse

from gpwaves.field import Grid
from gpwaves.kernels import fit_farfield
from gpwaves.solver import MinimizeConfig, minimize_at_momentum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=4.0)
    ap.add_argument("--annulus", type=float, nargs=2, default=[0.4, 0.8])
    args = ap.parse_args()
    for n, pts in (((32.0, 40.0), 256), ((64.0, 80.0), 512)):
        bp = minimize_at_momentum(MinimizeConfig(target_p=args.p), Grid(2, n, pts))
        fit = fit_farfield(bp.field, tuple(args.annulus), bp.c)
        print(f"box {n} @ {pts}: alpha measured {fit.measured.alpha:.5f} predicted {fit.predicted.alpha:.5f} "
              f"mismatch {fit.mismatch:.4f} ({fit.status})", flush=True)


if __name__ == "__main__":
    main()

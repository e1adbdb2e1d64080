"""Compare small-p 2D minimizers with the KP lump and fit the transonic exponents."""

import argparse
import json

from gpwaves.field import Grid
from gpwaves.kp1 import compare_with_lump, transonic_scalings_check
from gpwaves.solver import MinimizeConfig, minimize_at_momentum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--points", type=int, default=512)
    ap.add_argument("--box-scale", type=float, default=2.0)
    args = ap.parse_args()
    pts = []
    for p in sorted(args.p):
        s = args.box_scale
        g = Grid(2, (40 / p * s, 160 / p**2 * s), args.points)
        bp = minimize_at_momentum(MinimizeConfig(target_p=p, init="kp-ansatz"), g)
        pts.append(bp)
        cmp = compare_with_lump(bp.field, bp.c, p)
        print(f"p={p:g} c={bp.c:.5f} E={bp.E:.6f} linf={cmp['linf']:.5f} l2={cmp['l2']:.5f} {bp.status}", flush=True)
    print(json.dumps(transonic_scalings_check(pts), indent=2))


if __name__ == "__main__":
    main()

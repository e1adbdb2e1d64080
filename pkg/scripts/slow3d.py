"""3D sweep of sqrt2 p - E_min on a 64^3 torus (report only)."""

import argparse
import math

from gpwaves.field import Grid
from gpwaves.solver import MinimizeConfig, minimize_at_momentum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[10, 40, 80, 120])
    ap.add_argument("--n", type=float, default=7.0)
    ap.add_argument("--points", type=int, default=64)
    args = ap.parse_args()
    g = Grid(3, args.n, args.points)
    for p in args.p:
        try:
            bp = minimize_at_momentum(MinimizeConfig(target_p=p, max_iters=3000), g)
        except ValueError as exc:
            print(f"p={p:g}: {exc}")
            continue
        print(f"p={p:g} E={bp.E:.4f} sqrt2p-E={math.sqrt(2) * p - bp.E:+.4f} c={bp.c:.4f} {bp.status}", flush=True)


if __name__ == "__main__":
    main()

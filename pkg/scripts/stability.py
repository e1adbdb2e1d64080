"""Orbital distance of a perturbed 1D dark soliton for several perturbation sizes."""

import argparse

from gpwaves.dynamics import stability_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--deltas", type=float, nargs="+", default=[1e-3, 1e-2])
    ap.add_argument("--T", type=float, default=50.0)
    ap.add_argument("--A", type=float, default=20.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for d in args.deltas:
        r = stability_experiment(args.c, d, args.T, args.A, seed=args.seed)
        print(f"delta={d:g}: max orbital distance {r.max_distance:.3e}", flush=True)


if __name__ == "__main__":
    main()

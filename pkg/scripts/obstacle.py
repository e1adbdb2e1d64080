"""Local minimizer of the obstacle Hamiltonian and its damped-flow relaxation."""

import argparse
import math

from gpwaves.dynamics import obstacle_flow
from gpwaves.field import Grid, gaussian_potential, inner
from gpwaves.solver import local_minimize_hamiltonian, trust_region_defaults


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=0.3)
    ap.add_argument("--amplitude", type=float, default=0.04)
    ap.add_argument("--T", type=float, default=400.0)
    ap.add_argument("--dt", type=float, default=0.04)
    ap.add_argument("--damping", type=float, default=0.5)
    args = ap.parse_args()
    g = Grid(2, 8, 128)
    V = gaussian_potential(g, args.amplitude, 1.0)
    tr = trust_region_defaults(args.c)
    print(f"|V| = {V.l2_norm:.4f}, gate {tr.gate:.4f}, lambda {tr.lam:.4f}, kappa {tr.kappa:.4f}")
    res = local_minimize_hamiltonian(args.c, V, tr)
    print(res.summary())
    ob = obstacle_flow(V, args.c, args.T, dt=args.dt, damping=args.damping)
    d = ob.field.values - res.field.values
    print(f"relaxed: L2 distance {math.sqrt(inner(g, d, d)):.3e}, rate {ob.rate:.2e}, events {len(ob.events)}")


if __name__ == "__main__":
    main()

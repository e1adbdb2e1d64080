"""Regenerate the frozen high-precision reference values in values.json.

Everything here is computed with mpmath straight from the profile formulas and
integral definitions; nothing is imported from gpwaves. Run once, commit the JSON.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
SQ2 = mp.sqrt(2)


def profile(c):
    eps = mp.sqrt(2 - c * c)
    v = lambda x: mp.sqrt(eps**2 / 2) * mp.tanh(eps * x / 2) - 1j * c / SQ2
    return eps, v


def wave_integrals(c):
    """Energy and renormalized momentum by quadrature of the densities."""
    eps, v = profile(c)
    dv = lambda x: mp.diff(v, x)

    def e_dens(x):
        return abs(dv(x)) ** 2 / 2 + (1 - abs(v(x)) ** 2) ** 2 / 4

    def p_dens(x):
        vv, d = v(x), dv(x)
        rho2 = abs(vv) ** 2
        return (1 - rho2) * mp.im(mp.conj(vv) * d) / rho2 / 2

    L = 60 / eps
    pts = mp.linspace(-L, L, 13)
    E = mp.quad(e_dens, pts)
    p = mp.quad(p_dens, pts) if c > 0 else mp.pi / 2
    return E, p


def kdv_energy():
    N = lambda x: 1 / (2 * mp.cosh(x / 2) ** 2)
    return mp.quad(lambda x: mp.diff(N, x) ** 2 / 2 - N(x) ** 3, [-mp.inf, 0, mp.inf])


def k0_norm_sq(c, dim):
    """int_{R^dim} (|xi|^2 / (|xi|^4 + 2|xi|^2 - c^2 xi_1^2))^2 dxi in polar coordinates."""
    def dens(r, t):
        den = r**4 + 2 * r**2 - c * c * r**2 * mp.cos(t) ** 2
        return (r**2 / den) ** 2

    if dim == 2:
        return mp.quad(lambda t: mp.quad(lambda r: dens(r, t) * r, [0, 1, mp.inf]), [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])
    return 2 * mp.pi * mp.quad(lambda t: mp.sin(t) * mp.quad(lambda r: dens(r, t) * r**2, [0, 1, mp.inf]), [0, mp.pi / 2, mp.pi])


def lump_integrals():
    lump = lambda a, b: 24 * (3 - a * a + b * b) / (3 + a * a + b * b) ** 2
    # polar coordinates, angular integral first in closed-form-free numerics
    sq = mp.quad(lambda r: r * mp.quad(lambda t: lump(r * mp.cos(t), r * mp.sin(t)) ** 2, [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi]), [0, 1, 10, mp.inf])
    return sq


def main():
    out = {"dispersion": [], "kdv": {}, "k0_norm_sq": [], "transonic_1d": {}}
    for i in range(1, 14):
        c = mp.mpf(i) / 10
        E, p = wave_integrals(c)
        out["dispersion"].append({"c": float(c), "E": float(E), "p_renorm": float(p)})
    EK = kdv_energy()
    out["kdv"]["energy"] = float(EK)
    for eps in ("0.2", "0.1"):
        e = mp.mpf(eps)
        c = mp.sqrt(2 - e * e)
        E, p = wave_integrals(c)
        out["kdv"]["ratio_eps_" + eps] = float((SQ2 * p - E) / (-(e**5) / 4 * EK))
    for dim in (2, 3):
        for c in ("0", "0.5", "1", "1.3"):
            out["k0_norm_sq"].append({"dim": dim, "c": float(c), "value": float(k0_norm_sq(mp.mpf(c), dim))})
    # log-log slopes of the 1D branch near the sound speed, from high-precision quadrature
    eps = [mp.mpf(1) / 20, mp.mpf(1) / 40]
    rows = []
    for e in eps:
        c = mp.sqrt(2 - e * e)
        E, p = wave_integrals(c)
        rows.append((p, SQ2 * p - E, SQ2 - c))
    (p1, g1, d1), (p2, g2, d2) = rows
    out["transonic_1d"] = {"gap_exponent": float(mp.log(g1 / g2) / mp.log(p1 / p2)),
                           "speed_exponent": float(mp.log(d1 / d2) / mp.log(p1 / p2))}
    out["lump_l2_sq"] = float(lump_integrals())
    Path(__file__).with_name("values.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()

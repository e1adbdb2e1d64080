"""Closed-form one-dimensional travelling waves and the constructions built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate

SQRT2 = np.sqrt(2.0)
KINK_ENERGY = 2.0 * SQRT2 / 3.0


@dataclass(frozen=True)
class Wave1D:
    """Subsonic speed 0 <= c < sqrt(2) with eps = sqrt(2 - c^2)."""

    c: float
    eps: float = field(init=False)

    def __post_init__(self):
        c = float(self.c)
        if not (0.0 <= c < SQRT2):
            raise ValueError(f"speed must satisfy 0 <= c < sqrt(2), got {c}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "eps", float(np.sqrt(2.0 - c * c)))


@dataclass(frozen=True)
class DispersionPoint:
    c: float
    energy: float
    p_renorm: float
    p_physical: float
    mass: float


@dataclass(frozen=True)
class SampledProfile1D:
    xs: np.ndarray
    values: np.ndarray
    kind: str = "wave"

    def __post_init__(self):
        xs = np.asarray(self.xs, float)
        vals = np.asarray(self.values, complex)
        if xs.ndim != 1 or xs.shape != vals.shape:
            raise ValueError("xs and values must be matching 1D arrays")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if self.kind not in ("wave", "bridge", "sequence-element"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vals)


def sech2(y):
    """sech^2 without overflow for large |y|."""
    e = np.exp(-2.0 * np.abs(np.asarray(y, float)))
    return 4.0 * e / (1.0 + e) ** 2


def _wave(w) -> Wave1D:
    return w if isinstance(w, Wave1D) else Wave1D(w)


# ---------------------------------------------------------------- closed forms

def eval_vc(w: Wave1D, x):
    w = _wave(w)
    x = np.asarray(x, float)
    return w.eps / SQRT2 * np.tanh(w.eps * x / 2.0) - 1j * w.c / SQRT2


def eval_eta(w: Wave1D, x):
    w = _wave(w)
    x = np.asarray(x, float)
    return w.eps**2 / 2.0 * sech2(w.eps * x / 2.0)


def eval_phase_derivative(w: Wave1D, x):
    w = _wave(w)
    if w.c == 0.0:
        raise ValueError("phase of the kink (c=0) is not liftable")
    eta = eval_eta(w, x)
    return w.c * eta / (2.0 - 2.0 * eta)


def eval_phase(w: Wave1D, x):
    """Lifted phase, normalised so that it tends to -pi/2 - jump/2 at -infinity."""
    w = _wave(w)
    if w.c == 0.0:
        raise ValueError("phase of the kink (c=0) is not liftable")
    x = np.asarray(x, float)
    return np.arctan(w.eps / w.c * np.tanh(w.eps * x / 2.0)) - np.pi / 2.0


def phase_jump(w: Wave1D) -> float:
    """Total phase increase of v_c across the line (pi for the kink)."""
    w = _wave(w)
    return float(2.0 * np.arctan2(w.eps, w.c))


def limits(w: Wave1D) -> tuple[complex, complex]:
    w = _wave(w)
    a = np.sqrt(1.0 - w.c**2 / 2.0)
    return complex(-a, -w.c / SQRT2), complex(a, -w.c / SQRT2)


def dispersion(w: Wave1D) -> DispersionPoint:
    w = _wave(w)
    c, eps = w.c, w.eps
    return DispersionPoint(
        c=c,
        energy=eps**3 / 3.0,
        p_renorm=float(np.pi / 2 - np.arctan2(c, eps) - c * eps / 2.0),
        p_physical=-c * eps / 2.0,
        mass=-eps,
    )


def speed_from_momentum(p: float) -> float:
    """Invert p -> c on (0, pi/2) by bisection to width 1e-14 and one Newton step."""
    if not (0.0 < p < np.pi / 2):
        raise ValueError(f"renormalized momentum must lie in (0, pi/2), got {p}")
    lo, hi = 0.0, SQRT2
    f = lambda c: dispersion(Wave1D(c)).p_renorm - p
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    eps = np.sqrt(2.0 - c * c)
    if eps > 1e-6:
        c_new = c + f(c) / eps  # dp/dc = -eps
        if 0.0 <= c_new < SQRT2 and abs(c_new - c) < 1e-12:
            c = c_new
    return float(c)


def dispersion_slope_check(c: float, h: float = 1e-5) -> tuple[float, float]:
    """Central differences of the closed forms: (dp/dc, dE/dp)."""
    plus, minus = dispersion(Wave1D(c + h)), dispersion(Wave1D(c - h))
    dp = plus.p_renorm - minus.p_renorm
    return dp / (2 * h), (plus.energy - minus.energy) / dp


# ---------------------------------------------------------------- sampled quadrature

def sample_wave(w: Wave1D, h: float = 0.01, half_length: float | None = None) -> SampledProfile1D:
    """Sample v_c on [-L, L] with L = 40/eps unless given."""
    w = _wave(w)
    L = 40.0 / w.eps if half_length is None else half_length
    m = int(np.ceil(L / h))
    xs = np.linspace(-L, L, 2 * m + 1)
    return SampledProfile1D(xs, eval_vc(w, xs), "wave")


_FD8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def fd_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Eighth-order central differences; edges fall back to np.gradient."""
    v = np.asarray(values)
    out = np.gradient(v, h, edge_order=2)
    if v.size > len(_FD8):
        inner = sum(coef * v[j : v.size - 8 + j] for j, coef in enumerate(_FD8) if coef != 0.0)
        out[4:-4] = inner / h
    return out


def _uniform_h(profile: SampledProfile1D) -> float:
    d = np.diff(profile.xs)
    if np.ptp(d) > 1e-9 * d.mean():
        raise ValueError("profile must be uniformly sampled")
    return float(d.mean())


def trapezoid(y, h):
    return float(h * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def profile_energy(profile: SampledProfile1D) -> float:
    h = _uniform_h(profile)
    v = profile.values
    dv = fd_derivative(v, h)
    dens = 0.5 * np.abs(dv) ** 2 + 0.25 * (1.0 - np.abs(v) ** 2) ** 2
    return trapezoid(dens, h)


def profile_renormalized_momentum(profile: SampledProfile1D) -> float:
    """1/2 int (1 - rho^2) phi' with phi' = Im(conj(v) v')/rho^2; needs a nonvanishing profile."""
    h = _uniform_h(profile)
    v = profile.values
    rho2 = np.abs(v) ** 2
    if rho2.min() <= 0.0:
        raise ValueError("renormalized momentum needs a nonvanishing profile")
    dv = fd_derivative(v, h)
    dphi = np.imag(np.conj(v) * dv) / rho2
    return 0.5 * trapezoid((1.0 - rho2) * dphi, h)


def profile_physical_momentum(profile: SampledProfile1D) -> float:
    """1/2 int <i v', v> without the anchor at 1."""
    h = _uniform_h(profile)
    v = profile.values
    dv = fd_derivative(v, h)
    return 0.5 * trapezoid(np.real(1j * dv * np.conj(v)), h)


def ode_residual(profile: SampledProfile1D, c: float) -> np.ndarray:
    """i c v' + v'' + v (1 - |v|^2) on the interior samples."""
    h = _uniform_h(profile)
    v = profile.values
    d1 = fd_derivative(v, h)
    d2 = fd_derivative(d1, h)
    r = 1j * c * d1 + d2 + v * (1.0 - np.abs(v) ** 2)
    return r[8:-8]


# ---------------------------------------------------------------- constructions

@dataclass(frozen=True)
class BridgeResult:
    profile: SampledProfile1D
    ell: float
    measured_q: float
    measured_E: float
    lam: float
    delta: float


def bridge_map(q: float, mu: float, cells: int = 4096) -> BridgeResult:
    """Tent-profile bridge on [0, ell] carrying renormalized momentum q.

    f(s) = s on [0, 1/2], 1 - s on [1/2, 1], 0 on [1, 2]; psi(s) = s on [0, 1],
    2 - s on [1, 2]; lam = 1/(8|q|), delta = min(mu^2, 1/lam) and
    w = sqrt(1 - delta - f(s/lam)/lam) exp(+-i psi(s/lam)).
    """
    if not (0.0 < abs(q) <= 1.0 / 32.0):
        raise ValueError("bridge needs 0 < |q| <= 1/32")
    if not (0.0 < mu <= 0.25):
        raise ValueError("bridge needs 0 < mu <= 1/4")
    if cells % 4:
        raise ValueError("cells must be a multiple of 4 to hit the breakpoints")
    lam = 1.0 / (8.0 * abs(q))
    delta = min(mu * mu, 1.0 / lam)
    ell = 2.0 * lam
    sign = 1.0 if q > 0 else -1.0
    xs = np.linspace(0.0, ell, cells + 1)
    s = xs / lam
    f = np.where(s <= 0.5, s, np.where(s <= 1.0, 1.0 - s, 0.0)) / lam
    psi = np.where(s <= 1.0, s, 2.0 - s)
    rho = np.sqrt(1.0 - delta - f)
    w = rho * np.exp(1j * sign * psi)
    eta = 1.0 - np.abs(w) ** 2
    dphi = wrapped_diff_1d(w)
    # eta and phi are linear on every cell, so the midpoint rule is exact
    mq = 0.5 * float(np.sum(0.5 * (eta[1:] + eta[:-1]) * dphi))
    mE = _bridge_energy(lam, delta, sign)
    return BridgeResult(SampledProfile1D(xs, w, "bridge"), ell, mq, mE, lam, delta)


def wrapped_diff_1d(v: np.ndarray) -> np.ndarray:
    return np.angle(v[1:] * np.conj(v[:-1]))


def _bridge_energy(lam: float, delta: float, sign: float) -> float:
    """Energy of the bridge by adaptive quadrature on each smooth piece."""

    def dens(x):
        s = x / lam
        if s <= 0.5:
            f, df = s / lam, 1.0 / lam**2
        elif s <= 1.0:
            f, df = (1.0 - s) / lam, -1.0 / lam**2
        else:
            f, df = 0.0, 0.0
        rho2 = 1.0 - delta - f
        drho2 = df**2 / (4.0 * rho2)
        dpsi2 = 1.0 / lam**2
        return 0.5 * (drho2 + rho2 * dpsi2) + 0.25 * (delta + f) ** 2

    pieces = [(0.0, lam / 2), (lam / 2, lam), (lam, 2 * lam)]
    return float(sum(_integrate.quad(dens, a, b, epsabs=1e-14, epsrel=1e-12)[0] for a, b in pieces))


@dataclass(frozen=True)
class SequenceResult:
    profile: SampledProfile1D
    energy: float
    physical_momentum: float
    anchored_momentum: float
    renormalized_momentum: float


def zero_energy_sequence(p: float, n: int, cells_per_unit: int = 64, pad: float = 4.0) -> SequenceResult:
    """v_n = exp(i psi_n), psi_n = 0 (x <= -n), -p (x + n)/n on [-n, n], -2p (x >= n).

    The energy p^2/n vanishes as n grows while 1/2 int <i v', v> stays equal to p;
    the renormalized momentum 1/2 int (1 - rho^2) phi' is identically 0 since |v_n| = 1.
    """
    if p <= 0 or n < 1:
        raise ValueError("need p > 0 and n >= 1")
    L = n + pad
    m = int(round(2 * L * cells_per_unit))
    xs = np.linspace(-L, L, m + 1)
    psi = np.where(xs <= -n, 0.0, np.where(xs >= n, -2.0 * p, -p * (xs + n) / n))
    v = np.exp(1j * psi)
    h = xs[1] - xs[0]
    dpsi = np.diff(psi)  # exact increments of the piecewise-linear phase
    energy = 0.5 * float(np.sum(dpsi**2)) / h
    physical = -0.5 * float(np.sum(dpsi))
    anchored = physical + 0.5 * float(np.sin(psi[-1]) - np.sin(psi[0]))
    return SequenceResult(SampledProfile1D(xs, v, "sequence-element"), energy, physical, anchored, 0.0)


# ---------------------------------------------------------------- KdV limit

def kdv_soliton(x):
    x = np.asarray(x, float)
    return 0.5 * sech2(x / 2.0)


def kdv_rescale(w: Wave1D, x):
    """N_eps(x) = eta_c(x/eps)/eps^2, identically equal to 1/(2 cosh^2(x/2))."""
    w = _wave(w)
    if w.c == 0.0:
        raise ValueError("kdv_rescale needs 0 < c < sqrt(2)")
    return eval_eta(w, np.asarray(x, float) / w.eps) / w.eps**2


def kdv_energy(N=kdv_soliton, dN=None) -> float:
    """1/2 int N'^2 - int N^3 by adaptive quadrature."""
    if dN is None:
        dN = lambda x: -0.5 * np.tanh(x / 2.0) * sech2(x / 2.0)
    f = lambda x: 0.5 * dN(x) ** 2 - N(x) ** 3
    return float(_integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0])


def kdv_energy_gap(w: Wave1D) -> tuple[float, float]:
    """(sqrt2 p - E, -(eps^5/4) E_KdV(N)) for the wave of speed c."""
    w = _wave(w)
    d = dispersion(w)
    gap = SQRT2 * d.p_renorm - d.energy
    return float(gap), float(-(w.eps**5) / 4.0 * kdv_energy())


# ---------------------------------------------------------------- pointwise bound

def pointwise_momentum_bound_check(profile: SampledProfile1D, floor: float = 1e-14) -> float:
    """max rho |(1 - rho^2) phi'| / (sqrt2 e(v)); points with e < floor count as 0."""
    v = profile.values
    rho = np.abs(v)
    if rho.min() <= 0.0:
        raise ValueError("profile vanishes; the bound needs a lifting")
    h = _uniform_h(profile)
    dv = fd_derivative(v, h)
    e = 0.5 * np.abs(dv) ** 2 + 0.25 * (1.0 - rho**2) ** 2
    lhs = np.abs((1.0 - rho**2) * np.imag(np.conj(v) * dv)) / rho
    ratio = np.where(e < floor, 0.0, lhs / (SQRT2 * np.where(e < floor, 1.0, e)))
    return float(ratio.max())

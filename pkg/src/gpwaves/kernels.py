"""Fourier multipliers of the travelling-wave convolution system and far-field tools.

All symbols share the denominator D(xi) = |xi|^4 + 2|xi|^2 - c^2 xi_1^2. Kernel
indices are 1-based, so index 1 is the propagation axis.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma

from . import _fft
from .field import Field, Grid, deriv, energy, inner, momentum

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
KINDS = ("K0", "Kj", "Ljk", "Rjk", "Hjk", "H1jk", "Kjk")


class SingularSymbolError(ZeroDivisionError):
    """The symbol's denominator vanishes at the requested frequency."""


@dataclass(frozen=True)
class KernelSymbol:
    kind: str
    dim: int
    c: float
    j: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        need = {"K0": 0, "Kj": 1}.get(self.kind, 2)
        idx = [i for i in (self.j, self.k) if i is not None]
        if len(idx) != need:
            raise ValueError(f"{self.kind} takes {need} indices")
        if any(not 1 <= i <= self.dim for i in idx):
            raise ValueError("kernel indices must lie in 1..dim")


def denominator(xi, c: float) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi**2, axis=-1)
    return s * s + 2 * s - c * c * xi[..., 0] ** 2


def symbol_eval(s: KernelSymbol, xi) -> float | np.ndarray:
    """Exact value of the multiplier at xi (last axis holds the components)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != s.dim:
        raise ValueError("frequency has the wrong dimension")
    s2 = np.sum(xi**2, axis=-1)
    x = lambda i: xi[..., i - 1]
    if s.kind == "Rjk":
        if np.any(s2 == 0):
            raise SingularSymbolError("Riesz symbol is singular at xi = 0")
        out = x(s.j) * x(s.k) / s2
        return float(out) if np.ndim(out) == 0 else out
    D = denominator(xi, s.c)
    scale = np.maximum(s2 * s2 + 2 * s2, 1e-300)
    if np.any(np.abs(D) <= 1e-14 * scale):
        raise SingularSymbolError("denominator |xi|^4 + 2|xi|^2 - c^2 xi_1^2 vanishes")
    if s.kind == "K0":
        out = s2 / D
    elif s.kind == "Kj":
        out = x(1) * x(s.j) / D
    elif s.kind == "Ljk":
        out = x(1) ** 2 * x(s.j) * x(s.k) / (s2 * D)
    elif s.kind == "Hjk":
        out = x(s.j) * x(s.k) * s2 / D
    elif s.kind == "H1jk":
        out = x(1) * x(s.j) * x(s.k) / D
    else:  # Kjk
        out = x(s.j) * x(s.k) * (2 + s2) / D
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- L2 norms

def k0_l2_norm_sq(c: float, dim: int) -> float:
    """int |K0^(xi)|^2 dxi over R^dim (no 2 pi normalisation).

    The c = 0 value is the continuous limit of both closed forms.
    """
    if not 0 <= c < SQRT2:
        raise ValueError("speed must satisfy 0 <= c < sqrt2")
    if dim == 3:
        return math.pi**2 / SQRT2 if c == 0 else math.pi**2 * math.asin(c / SQRT2) / c
    if dim == 2:
        return math.pi / math.sqrt(2 * (2 - c * c))
    raise ValueError("dim must be 2 or 3")


def k0_l2_norm_sq_quadrature(c: float, dim: int, radius: float = math.inf) -> float:
    """Adaptive quadrature of |K0^|^2 over the ball of given radius, in polar coordinates."""
    if dim == 2:
        # |K0|^2 r dr = r / (r^2 + 2 - c^2 cos^2 t)^2 dr
        def inner_r(t):
            a = 2 - (c * math.cos(t)) ** 2
            return integrate.quad(lambda r: r / (r * r + a) ** 2, 0, radius, epsabs=1e-14, epsrel=1e-12)[0]
        return integrate.quad(inner_r, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    if dim == 3:
        def inner_r(mu):
            a = 2 - (c * mu) ** 2
            return integrate.quad(lambda r: r * r / (r * r + a) ** 2, 0, radius, epsabs=1e-14, epsrel=1e-12)[0]
        return 2 * math.pi * integrate.quad(inner_r, -1, 1, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    raise ValueError("dim must be 2 or 3")


def sphere_rule(dim: int, order: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (rows) and weights on the unit sphere: uniform angles in 2D, Lebedev in 3D."""
    if dim == 2:
        t = 2 * np.pi * np.arange(order * 8) / (order * 8)
        return np.stack([np.cos(t), np.sin(t)], axis=1), np.full(t.size, 2 * np.pi / t.size)
    if dim == 3:
        from scipy.integrate import lebedev_rule

        x, w = lebedev_rule(order)
        return x.T, w
    raise ValueError("dim must be 2 or 3")


def denominator_min_on_sphere(c: float, dim: int, r: float, samples: int = 4096) -> float:
    """Minimum of D over the sphere |xi| = r by dense angular sampling (poles included)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    if dim == 1:
        sig = np.array([[1.0], [-1.0]])
    elif dim == 2:
        t = 2 * np.pi * np.arange(samples) / samples
        sig = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        # Fibonacci sphere plus both poles of the x1 axis
        i = np.arange(samples) + 0.5
        mu = 1 - 2 * i / samples
        ph = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(1 - mu**2)
        sig = np.stack([mu, s * np.cos(ph), s * np.sin(ph)], axis=1)
        sig = np.vstack([sig, [[1, 0, 0], [-1, 0, 0]]])
    return float(np.min(denominator(r * sig, c)))


# ---------------------------------------------------------------- far field

@dataclass(frozen=True)
class FarFieldCoeffs:
    alpha: float
    betas: tuple[float, ...]
    lambda_inf: complex = 1.0 + 0.0j

    def __post_init__(self):
        if abs(abs(self.lambda_inf) - 1.0) > 1e-12:
            raise ValueError("lambda_inf must have modulus 1")

    def to_dict(self) -> dict:
        lam = complex(self.lambda_inf)
        return {"alpha": self.alpha, "betas": list(self.betas), "lambda_inf": [lam.real, lam.imag]}


def farfield_coeffs(E: float, p: float, P_transverse, c: float, dim: int) -> FarFieldCoeffs:
    if not 0 <= c < SQRT2:
        raise ValueError("speed must satisfy 0 <= c < sqrt2")
    N = dim
    g = gamma(N / 2) / math.pi ** (N / 2)
    s = 1 - c * c / 2
    alpha = 0.5 * g * s ** ((N - 3) / 2) * ((4 - N) / 2 * c * E + (2 + (N - 3) / 2 * c * c) * p)
    Pt = list(P_transverse)
    if len(Pt) != N - 1:
        raise ValueError("need one transverse momentum per transverse axis")
    betas = tuple(float(g * s ** ((N - 1) / 2) * P) for P in Pt)
    return FarFieldCoeffs(float(alpha), betas)


def farfield_profile(co: FarFieldCoeffs, sigma, c: float) -> float | np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    N = sigma.shape[-1]
    if len(co.betas) != N - 1:
        raise ValueError("coefficients and direction have different dimensions")
    if np.any(np.abs(np.sum(sigma**2, axis=-1) - 1) > 1e-10):
        raise ValueError("sigma must be a unit vector")
    den = (1 - c * c / 2 + c * c * sigma[..., 0] ** 2 / 2) ** (N / 2)
    num = co.alpha * sigma[..., 0]
    for j, b in enumerate(co.betas):
        num = num + b * sigma[..., j + 1]
    out = num / den
    return float(out) if np.ndim(out) == 0 else out


def farfield_templates(grid: Grid, c: float, smoothing: float | None = None) -> list[np.ndarray]:
    """Periodic versions of sigma_j / (r^(N-1) D(sigma)^(N/2)), one per axis.

    Each is a derivative of the Green function of a d1^2 + b Lap_perp (a = 2 - c^2,
    b = 2), summed over the periodic images and normalised to the free-space shape.
    The point source is smeared by a Gaussian of width ``smoothing`` (default three
    grid spacings): sampling the band-limited point-source field leaves an O(1)
    artefact on the grid lines through the origin, while a resolved source only
    changes the field by O(s^2 / r^2) away from the core.
    """
    N = grid.dim
    a, b = 2 - c * c, 2.0
    area = 2 * math.pi ** (N / 2) / gamma(N / 2)
    root = math.sqrt(a * b ** (N - 1))
    sym = a * np.array(grid.wavenumbers(0)) ** 2
    for ax in range(1, N):
        sym = sym + b * np.array(grid.wavenumbers(ax)) ** 2
    sym = np.broadcast_to(sym, grid.shape)
    inv = np.zeros(grid.shape)
    nz = sym > 0
    inv[nz] = 1.0 / sym[nz]
    s = 3.0 * max(grid.spacing) if smoothing is None else smoothing
    inv = inv * np.exp(-0.5 * s * s * np.array(grid.ksq()))
    scale = np.prod(grid.points) / grid.volume
    out = []
    for ax in range(N):
        k = np.array(grid.wavenumbers(ax), copy=True)
        k.reshape(-1)[grid.points[ax] // 2] = 0.0
        green_d = _fft.ifftn(-1j * k * inv).real * scale
        # index 0 is the corner x = -pi n; move the source to the origin
        green_d = np.roll(green_d, [p // 2 for p in grid.points], axis=tuple(range(N)))
        const = area * root / a ** (N / 2 - 1) if ax == 0 else b * area * root / a ** (N / 2)
        out.append(const * green_d)
    return out


@dataclass
class FarFieldFit:
    measured: FarFieldCoeffs
    predicted: FarFieldCoeffs
    mismatch: float
    status: str
    residual: float
    annulus: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "measured": self.measured.to_dict(),
            "predicted": self.predicted.to_dict(),
            "mismatch": self.mismatch,
            "status": self.status,
            "residual": self.residual,
            "annulus": list(self.annulus),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def transverse_momenta(f: Field) -> list[float]:
    g = f.grid
    u = f.values
    return [0.5 * inner(g, 1j * deriv(g, u, ax), u - 1.0) for ax in range(1, g.dim)]


def fit_farfield(f: Field, annulus: tuple[float, float], c: float, core: float | None = None) -> FarFieldFit:
    """Least-squares fit of the phase far field against periodic templates.

    lambda_inf starts from the modulus-weighted mean phase on the outer annulus; a
    constant phase offset is then fitted jointly with alpha and the betas, because the
    periodic far field of a finite box never reaches the asymptotic constant.
    ``annulus`` is given in units of the half box (r / min half-length).
    """
    g = f.grid
    u = f.values
    half = min(g.lengths) / 2
    r = g.radius()
    r0, r1 = annulus[0] * half, annulus[1] * half
    status = "ok"
    if annulus[1] > 0.95 or (core is not None and r0 < 3 * core):
        status = "warning: annulus too close to the boundary or the core"
    mask = (r >= r0) & (r <= r1)
    outer = r >= r1
    if not np.any(mask):
        raise ValueError("annulus contains no grid points")
    zsum = np.sum(u[outer] if np.any(outer) else u[mask])
    lam = zsum / abs(zsum) if abs(zsum) > 0 else 1.0 + 0j
    E, p = energy(f), momentum(f)
    Pt = transverse_momenta(f)
    predicted = farfield_coeffs(E, p, Pt, c, g.dim)
    ph = np.angle(np.conj(lam) * u)
    if np.allclose(u, u.reshape(-1)[0]):
        measured = FarFieldCoeffs(0.0, (0.0,) * (g.dim - 1), complex(lam))
        return FarFieldFit(measured, predicted, 0.0 if predicted.alpha == 0 else 1.0, status, 0.0, (r0, r1))
    T = farfield_templates(g, c)
    A = np.stack([np.ones(int(mask.sum()))] + [t[mask] for t in T], axis=1)
    coef, *_ = np.linalg.lstsq(A, ph[mask], rcond=None)
    resid = ph[mask] - A @ coef
    rel = float(np.linalg.norm(resid) / max(np.linalg.norm(ph[mask]), 1e-300))
    lam = lam * np.exp(1j * coef[0])
    measured = FarFieldCoeffs(float(coef[1]), tuple(float(b) for b in coef[2:]), complex(lam / abs(lam)))
    mism = abs(measured.alpha - predicted.alpha) / max(abs(predicted.alpha), 1e-300)
    return FarFieldFit(measured, predicted, float(mism), status, rel, (r0, r1))


# ---------------------------------------------------------------- Riesz kernel

def riesz_kernel(j: int, k: int, x, dim: int) -> float | np.ndarray:
    """Gamma(N/2)/(2 pi^(N/2)) (delta_jk |x|^2 - N x_j x_k) / |x|^(N+2), indices 1-based."""
    if not (1 <= j <= dim and 1 <= k <= dim):
        raise ValueError("indices must lie in 1..dim")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x**2, axis=-1)
    if np.any(r2 == 0):
        raise SingularSymbolError("Riesz kernel is singular at x = 0")
    N = dim
    pref = gamma(N / 2) / (2 * math.pi ** (N / 2))
    out = pref * ((j == k) * r2 - N * x[..., j - 1] * x[..., k - 1]) / r2 ** ((N + 2) / 2)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- toy decay model

@dataclass
class ToyDecayResult:
    exponent: float
    iterations: int
    status: str
    xs: np.ndarray
    f: np.ndarray


def algebraic_kernel(alpha_k: float, length: float = 2.0**14, points: int = 2**16) -> tuple[np.ndarray, np.ndarray]:
    """Samples of K(x) = 1 / (1 + |x|^alpha_k) on a centred uniform grid."""
    x = (np.arange(points) - points // 2) * (length / points)
    return x, 1.0 / (1.0 + np.abs(x) ** alpha_k)


def tail_exponent(x: np.ndarray, f: np.ndarray, window: tuple[float, float]) -> float:
    m = (x >= window[0]) & (x <= window[1]) & (np.abs(f) > 0)
    return float(-np.polyfit(np.log(x[m]), np.log(np.abs(f[m])), 1)[0])


def toy_decay_iteration(K, r: float, f0: np.ndarray, x: np.ndarray, max_iters: int = 60,
                        tol: float = 1e-10, window: tuple[float, float] | None = None) -> ToyDecayResult:
    """Iterate f <- K * f^r on a uniform 1D grid (linear convolution) and fit the tail.

    ``K`` is a callable kernel or its samples on ``x`` (treated as zero outside).
    Each iterate is renormalised to unit maximum, which leaves the decay rate alone
    and keeps the iteration away from the trivial fixed point.
    """
    if r <= 1:
        raise ValueError("the toy model needs r > 1")
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    n = x.size
    if window is None:
        window = (x[-1] / 40, x[-1] / 4)
    f = np.asarray(f0, dtype=float)
    if not np.any(f):
        return ToyDecayResult(float("nan"), 0, "zero", x, f)
    if callable(K):
        kfun = K
    else:
        Ks = np.asarray(K, dtype=float)
        kfun = lambda d: np.interp(d, x - x[n // 2], Ks, left=0.0, right=0.0)
    m = 2 * n
    d = np.arange(-(n - 1), n)
    kk = np.zeros(m)
    kk[d % m] = kfun(d * h)
    Khat = np.fft.rfft(kk)
    status = "max-iters"
    it = 0
    for it in range(1, max_iters + 1):
        src = np.zeros(m)
        src[:n] = np.abs(f) ** r * np.sign(f)
        conv = np.fft.irfft(Khat * np.fft.rfft(src), m)[:n] * h
        if not np.all(np.isfinite(conv)):
            return ToyDecayResult(float("nan"), it, "diverged", x, f)
        mx = np.max(np.abs(conv))
        if mx == 0:
            return ToyDecayResult(float("nan"), it, "zero", x, conv)
        new = conv / mx
        done = np.max(np.abs(new - f)) < tol
        f = new
        if done:
            status = "converged"
            break
    return ToyDecayResult(tail_exponent(x, f, window), it, status, x, f)

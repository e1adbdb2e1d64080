"""KP-I solitary waves: the lump, residuals, scalings and the comparison with GP waves.

KP coordinates (X1, X2) relate to GP coordinates by X1 = eps x1, X2 = eps^2 x2 / sqrt2
and the KP amplitude is N = 6 eta / eps^2, with eps = sqrt(2 - c^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fft
from .field import Field, Grid, plaquette_winding

SQRT2 = math.sqrt(2.0)
LUMP_L2_SQ = 96.0 * math.pi  # int lump^2 over the plane


def lump(x1, x2):
    r2 = np.asarray(x1) ** 2 + np.asarray(x2) ** 2
    return 24.0 * (3.0 - np.asarray(x1) ** 2 + np.asarray(x2) ** 2) / (3.0 + r2) ** 2


@dataclass(frozen=True, eq=False)
class KPField:
    """Real samples of a KP profile on a 2D periodic grid (axis 0 = X1)."""

    grid: Grid
    values: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        if self.grid.dim != 2:
            raise ValueError("KP fields are two-dimensional")
        v = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("KP field has non-finite samples")
        if self.zero_mean:
            scale = max(float(np.max(np.abs(v))), 1.0)
            if np.max(np.abs(v.mean(axis=0))) > 1e-12 * scale:
                raise ValueError("zero-mean flag set but an x1-line has nonzero mean")
        object.__setattr__(self, "values", v)

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(self.values**2)) * self.grid.cell_volume)

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


def remove_line_means(grid: Grid, values: np.ndarray) -> KPField:
    v = np.asarray(values, dtype=float)
    return KPField(grid, v - v.mean(axis=0, keepdims=True), zero_mean=True)


def sample_lump(grid: Grid, zero_mean: bool = True) -> KPField:
    x1, x2 = grid.mesh()
    v = lump(x1, x2)
    return remove_line_means(grid, v) if zero_mean else KPField(grid, v)


# ---------------------------------------------------------------- spectral pieces

def _symbols(grid: Grid):
    # odd powers of d1 drop the Nyquist column so real fields stay real
    k1 = np.array(grid.wavenumbers(0), copy=True)
    k1.reshape(-1)[grid.points[0] // 2] = 0.0
    k2 = np.array(grid.wavenumbers(1))
    inv = np.zeros_like(k1, dtype=complex)
    nz = k1 != 0
    inv[nz] = 1.0 / (1j * k1[nz])
    return k1, k2, inv


def _require_zero_mean(w: KPField):
    if not w.zero_mean:
        raise ValueError("KP operator needs a zero-mean-in-x1 field (inverse of d1)")


def d1_inverse(w: KPField) -> np.ndarray:
    _require_zero_mean(w)
    _, _, inv = _symbols(w.grid)
    return _fft.ifftn(inv * _fft.fftn(w.values)).real


def d1(grid: Grid, a: np.ndarray, order: int = 1) -> np.ndarray:
    k1 = _symbols(grid)[0]
    return _fft.ifftn((1j * k1) ** order * _fft.fftn(a)).real


def sw_residual_array(w: KPField, sigma: float) -> np.ndarray:
    """sigma d1 w - w d1 w - d1^3 w + d1^-1 d2^2 w."""
    _require_zero_mean(w)
    k1, k2, inv = _symbols(w.grid)
    what = _fft.fftn(w.values)
    d1w = _fft.ifftn(1j * k1 * what).real
    d111 = _fft.ifftn((1j * k1) ** 3 * what).real
    tail = _fft.ifftn(inv * (-(k2**2)) * what).real
    return sigma * d1w - w.values * d1w - d111 + tail


def sw_residual(w: KPField, sigma: float) -> float:
    r = sw_residual_array(w, sigma)
    return math.sqrt(float(np.sum(r**2)) * w.grid.cell_volume)


def kp_energy(w: KPField) -> float:
    _require_zero_mean(w)
    g = w.grid
    k1, k2, inv = _symbols(g)
    what = _fft.fftn(w.values)
    a = _fft.ifftn(1j * k1 * what).real
    b = _fft.ifftn(inv * 1j * k2 * what).real
    dv = g.cell_volume
    return float(0.5 * np.sum(a**2) * dv + 0.5 * np.sum(b**2) * dv - np.sum(w.values**3) * dv / 6.0)


def kp_action(w: KPField) -> float:
    return kp_energy(w) + 0.5 * float(np.sum(w.values**2)) * w.grid.cell_volume


# ---------------------------------------------------------------- resampling

def _trig_matrix(grid: Grid, ax: int, x_new: np.ndarray) -> np.ndarray:
    """Matrix evaluating the trigonometric interpolant along axis ax at x_new."""
    N = grid.points[ax]
    x0 = grid.axis(ax)[0]
    k = np.fft.fftfreq(N, d=1.0 / N) / grid.ns[ax]
    arg = np.outer(np.asarray(x_new) - x0, k)
    M = np.exp(1j * arg) / N
    M[:, N // 2] = np.cos(arg[:, N // 2]) / N
    return M


def spectral_resample(grid: Grid, values: np.ndarray, axes_new: list[np.ndarray]) -> np.ndarray:
    """Evaluate the periodic trigonometric interpolant of real samples on a tensor grid."""
    out = np.asarray(values, dtype=complex)
    for ax, xs in enumerate(axes_new):
        F = np.fft.fft(out, axis=ax)
        M = _trig_matrix(grid, ax, xs)
        out = np.moveaxis(np.tensordot(M, np.moveaxis(F, ax, 0), axes=(1, 0)), 0, ax)
    return out.real


def scale_family(w: KPField, sigma: float, grid: Grid | None = None) -> KPField:
    """w_sigma(x1, x2) = sigma w(sqrt(sigma) x1, sigma x2).

    Without ``grid`` the samples are relabelled onto the stretched grid, which is exact.
    With ``grid`` the result is evaluated there by trigonometric interpolation.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    g = w.grid
    if grid is None:
        ng = Grid(2, (g.ns[0] / math.sqrt(sigma), g.ns[1] / sigma), g.points)
        return KPField(ng, sigma * w.values, zero_mean=w.zero_mean)
    xs = [math.sqrt(sigma) * grid.axis(0), sigma * grid.axis(1)]
    vals = sigma * spectral_resample(g, w.values, xs)
    return remove_line_means(grid, vals) if w.zero_mean else KPField(grid, vals)


# ---------------------------------------------------------------- GP <-> KP

def kp_grid_for(grid: Grid, eps: float) -> Grid:
    return Grid(2, (grid.ns[0] * eps, grid.ns[1] * eps**2 / SQRT2), grid.points)


def gp_grid_for(grid: Grid, eps: float) -> Grid:
    return Grid(2, (grid.ns[0] / eps, grid.ns[1] * SQRT2 / eps**2), grid.points)


def gp_to_kp(u: Field, c: float, grid: Grid | None = None) -> KPField:
    """N(X) = 6/eps^2 eta(X1/eps, sqrt2 X2/eps^2), mean-corrected on each x1-line."""
    if u.grid.dim != 2:
        raise ValueError("GP field must be two-dimensional")
    if not 0 <= c < SQRT2:
        raise ValueError("speed must be subsonic")
    if np.any(plaquette_winding(u.values) != 0):
        raise ValueError("field has vortices; outside the transonic regime")
    eps = math.sqrt(2.0 - c * c)
    N = 6.0 / eps**2 * (1.0 - np.abs(u.values) ** 2)
    kg = kp_grid_for(u.grid, eps)
    if grid is not None:
        N = spectral_resample(kg, N, [grid.axis(0), grid.axis(1)])
        kg = grid
    return remove_line_means(kg, N)


def kp_to_gp(w: KPField, eps: float, grid: Grid | None = None) -> Field:
    """Inverse of gp_to_kp: eta = eps^2 w / 6 on the stretched grid, phase from d1 phi."""
    if not 0 < eps <= SQRT2:
        raise ValueError("eps must lie in (0, sqrt2]")
    gg = gp_grid_for(w.grid, eps)
    vals = w.values
    if grid is not None:
        xs = [eps * grid.axis(0), eps**2 * grid.axis(1) / SQRT2]
        vals = spectral_resample(w.grid, vals, xs)
        gg = grid
    eta = eps**2 / 6.0 * vals
    if eta.max() >= 1.0:
        raise ValueError("KP amplitude too large: density would vanish")
    c = math.sqrt(2.0 - eps**2)
    g = c * eta / (2.0 * (1.0 - eta))
    g = g - g.mean(axis=0, keepdims=True)
    k1 = np.array(gg.wavenumbers(0))
    inv = np.zeros_like(k1, dtype=complex)
    inv[k1 != 0] = 1.0 / (1j * k1[k1 != 0])
    phi = _fft.ifftn(inv * _fft.fftn(g)).real
    return Field(gg, np.sqrt(1.0 - eta) * np.exp(1j * phi))


def compare_with_lump(u: Field, c: float, p: float | None = None) -> dict:
    """Discrepancy between the rescaled GP density and the lump, on the GP samples."""
    eps = math.sqrt(2.0 - c * c)
    x1, x2 = u.grid.mesh()
    N = 6.0 / eps**2 * (1.0 - np.abs(u.values) ** 2)
    L = lump(eps * x1, eps**2 * x2 / SQRT2)
    diff = N - L
    jac = eps**3 / SQRT2
    l2 = math.sqrt(float(np.sum(diff**2)) * u.grid.cell_volume * jac)
    return {"p": p, "c": c, "eps": eps,
            "linf": float(np.max(np.abs(diff))) / 8.0,
            "l2": l2 / math.sqrt(LUMP_L2_SQ)}


# ---------------------------------------------------------------- transonic scalings

def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def transonic_scalings_check(branch, n_smallest: int = 3, tol: float = 0.4) -> dict:
    """Fit sqrt2 p - E ~ p^3 and sqrt2 - c ~ p^2 over the smallest-p branch points.

    ``branch`` holds objects with attributes p, E, c (BranchPoint) or (p, E, c) tuples.
    """
    pts = []
    for b in branch:
        p, E, c = (b.p, b.E, b.c) if hasattr(b, "E") else b
        if p > 0 and math.isfinite(c) and math.isfinite(E):
            pts.append((p, E, c))
    pts.sort()
    pts = pts[:n_smallest]
    if len(pts) < 2:
        return {"status": "insufficient-points", "n": len(pts)}
    p = np.array([q[0] for q in pts])
    gap = SQRT2 * p - np.array([q[1] for q in pts])
    dc = SQRT2 - np.array([q[2] for q in pts])
    if np.any(gap <= 0) or np.any(dc <= 0):
        return {"status": "non-positive-gap", "n": len(pts)}
    eg, ec = _loglog_slope(p, gap), _loglog_slope(p, dc)
    return {
        "status": "ok",
        "n": len(pts),
        "p": p.tolist(),
        "gap": gap.tolist(),
        "sound_minus_c": dc.tolist(),
        "gap_exponent": eg,
        "speed_exponent": ec,
        "gap_ok": abs(eg - 3.0) <= tol,
        "speed_ok": abs(ec - 2.0) <= tol,
    }

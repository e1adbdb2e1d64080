"""Constrained minimization of the energy at fixed momentum, and the obstacle Hamiltonian."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from . import _fft
from .analytic1d import SQRT2, Wave1D
from .field import (
    Field,
    Grid,
    Potential,
    deriv,
    energy_array,
    energy_gradient,
    hamiltonian_gradient,
    inner,
    integrate,
    kinetic,
    momentum_array,
    plaquette_winding,
    read_gpwv,
    twisted_wave,
)
from .kp1 import lump

log = logging.getLogger(__name__)

STATUS_CONVERGED = "converged"
STATUS_MAXITER = "non-convergence"
STATUS_TRIVIAL = "trivial-minimizer"
STATUS_STALLED = "line-search-failure"


@dataclass
class MinimizeConfig:
    """Settings for minimize_at_momentum.

    ``init`` is one of "vortex-pair", "kp-ansatz", "dark-1d", "file", "constant" and
    ``init_param`` its parameter (separation d, eps, speed c or a path). A None
    parameter is derived from target_p.
    """

    target_p: float
    max_iters: int = 5000
    grad_tol: float = 1e-7
    constraint_tol: float = 1e-9
    step_rule: str = "backtracking"
    step: float = 1.0
    init: str = "vortex-pair"
    init_param: float | str | None = None
    method: str = "cg"
    precond_mass: float = 2.0
    phase_boost: float = 1.0
    recenter: bool = True
    correct_every: int = 1
    trivial_eta: float = 1e-6

    def __post_init__(self):
        if self.grad_tol <= 0 or self.constraint_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.target_p < 0:
            raise ValueError("target_p must be non-negative")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError("step_rule must be 'fixed' or 'backtracking'")
        if self.method not in ("cg", "gradient"):
            raise ValueError("method must be 'cg' or 'gradient'")


@dataclass
class BranchPoint:
    p: float
    E: float
    c: float
    field_path: str | None
    pohozaev: tuple[float, float]
    vortices: list
    status: str
    iters: int
    target_p: float
    residual: float
    c_slope: float = float("nan")
    field: Field | None = dc_field(default=None, repr=False)
    energy_history: list = dc_field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {
            "p_target": self.target_p,
            "p_achieved": self.p,
            "E": self.E,
            "c_multiplier": self.c,
            "c_slope": self.c_slope,
            "pohozaev_r1": self.pohozaev[0],
            "pohozaev_r2": self.pohozaev[1],
            "n_vortices": len(self.vortices),
            "iters": self.iters,
            "status": self.status,
        }


BRANCH_COLUMNS = ["p_target", "p_achieved", "E", "c_multiplier", "c_slope", "pohozaev_r1",
                  "pohozaev_r2", "n_vortices", "iters", "status"]


# ---------------------------------------------------------------- ansatz fields

def _cutoff(r: np.ndarray, r0: float, r1: float) -> np.ndarray:
    """Smooth radial step equal to 1 for r <= r0 and 0 for r >= r1."""
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    a = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    b = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    return a / (a + b)


def ansatz_vortex_pair(grid: Grid, d: float) -> Field:
    """Vortex at (0, d/2) and antivortex at (0, -d/2), arranged to move towards +x1.

    In 3D the same profile is used in the (x1, |x_perp|) half-plane, which gives a
    vortex ring of radius d/2 around the x1 axis.
    """
    if grid.dim not in (2, 3):
        raise ValueError("vortex pair ansatz needs dim 2 or 3")
    half = min(grid.lengths) / 2
    if d < 0 or d > 0.4 * half:
        raise ValueError("separation does not fit in the box")
    xs = grid.mesh()
    x1 = xs[0]
    x2 = xs[1] if grid.dim == 2 else np.sqrt(xs[1] ** 2 + xs[2] ** 2)
    zp = x1 + 1j * (x2 - d / 2)
    zm = x1 + 1j * (x2 + d / 2)
    theta = np.angle(zm * np.conj(zp))  # single valued away from the segment between the cores
    r = grid.radius()
    theta = theta * _cutoff(r, 0.45 * half, 0.9 * half)
    rho = np.abs(zp) / np.sqrt(np.abs(zp) ** 2 + 2.0) * np.abs(zm) / np.sqrt(np.abs(zm) ** 2 + 2.0)
    if d == 0:
        rho = np.ones(grid.shape)
        theta = np.zeros(grid.shape)
    return Field(grid, rho * np.exp(1j * theta))


def _kp_profile_to_gp(grid: Grid, w_values_fn, eps: float) -> Field:
    """Build u = sqrt(1 - eta) exp(i phi) from a KP profile w(X1, X2).

    eta(x) = eps^2/6 w(eps x1, eps^2 x2 / sqrt2) and phi' = c eta / (2 (1 - eta)) with the
    per-line mean of phi' removed so that phi is periodic.
    """
    x1, x2 = grid.mesh()
    eta = eps**2 / 6.0 * w_values_fn(eps * x1, eps**2 * x2 / SQRT2)
    if eta.max() >= 1.0:
        raise ValueError("KP amplitude too large: density would vanish")
    c = math.sqrt(max(2.0 - eps**2, 0.0))
    g = c * eta / (2.0 * (1.0 - eta))
    phi = inverse_d1(grid, g - g.mean(axis=0, keepdims=True))
    return Field(grid, np.sqrt(1.0 - eta) * np.exp(1j * phi))


def inverse_d1(grid: Grid, g: np.ndarray) -> np.ndarray:
    k1 = np.array(grid.wavenumbers(0))
    inv = np.zeros_like(k1, dtype=complex)
    nz = k1 != 0
    inv[nz] = 1.0 / (1j * k1[nz])
    out = _fft.ifftn(inv * _fft.fftn(g))
    return out.real if np.isrealobj(g) else out


def ansatz_from_lump(grid: Grid, eps: float) -> Field:
    if grid.dim != 2:
        raise ValueError("lump ansatz is two-dimensional")
    half = np.array(grid.lengths) / 2
    if 3.0 / eps > half[0] or 3.0 * SQRT2 / eps**2 > half[1]:
        raise ValueError("lump core does not fit in the box")
    return _kp_profile_to_gp(grid, lump, eps)


def ansatz_dark_planar(grid: Grid, c: float) -> Field:
    """1D wave of speed c along x1, replicated across the transverse axes."""
    g1 = Grid(1, grid.ns[0], (grid.points[0],))
    if 8.0 / Wave1D(c).eps > grid.lengths[0] / 2:
        raise ValueError("1D core does not fit in the box")
    f1, _ = twisted_wave(g1, c)
    shape = (grid.points[0],) + (1,) * (grid.dim - 1)
    return Field(grid, np.broadcast_to(f1.values.reshape(shape), grid.shape).copy())


def initial_field(cfg: MinimizeConfig, grid: Grid) -> Field:
    kind, par = cfg.init, cfg.init_param
    if kind == "constant":
        return Field(grid, np.ones(grid.shape, complex))
    if kind == "file":
        f = read_gpwv(par)
        if f.grid != grid:
            raise ValueError("initial field grid does not match")
        return f
    if kind == "vortex-pair":
        d = _separation_for_momentum(grid, cfg.target_p) if par is None else float(par)
        return ansatz_vortex_pair(grid, d)
    if kind == "kp-ansatz":
        eps = 3.0 * cfg.target_p / (4.0 * np.pi) if par is None else float(par)
        return ansatz_from_lump(grid, eps)
    if kind == "dark-1d":
        c = 0.5 if par is None else float(par)
        return ansatz_dark_planar(grid, c)
    raise ValueError(f"unknown init {kind!r}")


def _separation_for_momentum(grid: Grid, p: float) -> float:
    """Separation d of the pair ansatz whose momentum equals p (bisection)."""
    mom = lambda d: momentum_array(grid, ansatz_vortex_pair(grid, d).values)
    dmax = 0.4 * min(grid.lengths) / 2
    lo, hi = 0.0, min(max(1.0, p / np.pi), dmax)
    while mom(hi) < p:
        if hi >= dmax:
            raise ValueError("momentum too large for the box")
        lo, hi = hi, min(2 * hi, dmax)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if mom(mid) < p else (lo, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- preconditioner

class _Precond:
    """Symmetric preconditioner (a - Lap)^-1 plus a boost of the phase direction.

    P g = (a - Lap)^-1 g + b i u (-Lap)^+ Im(conj(u) g); the second term makes long
    phase modes, whose Hessian is close to -Lap, as cheap to move as short ones.
    """

    def __init__(self, grid: Grid, a: float, b: float):
        self.grid = grid
        k2 = np.array(grid.ksq())
        self.m1 = 1.0 / (a + k2)
        inv = np.zeros_like(k2)
        inv[k2 > 0] = 1.0 / k2[k2 > 0]
        self.m2 = inv
        self.b = b

    def __call__(self, u: np.ndarray, g: np.ndarray) -> np.ndarray:
        out = _fft.ifftn(self.m1 * _fft.fftn(g))
        if self.b:
            s = np.imag(np.conj(u) * g)
            out = out + self.b * 1j * u * _fft.ifftn(self.m2 * _fft.fftn(s)).real
        return out


# ---------------------------------------------------------------- constrained descent

def _quad_root(a: float, b: float, c: float) -> float | None:
    """Root of a s^2 + b s + c = 0 closest to zero."""
    if abs(a) < 1e-300:
        return None if b == 0 else -c / b
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [q / a] + ([c / q] if q != 0 else [])
    return min(roots, key=abs)


class _Problem:
    """Energy, momentum and their gradients on a fixed grid, with cached transforms."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.k2 = np.array(grid.ksq())
        self.dv = grid.cell_volume
        self.k1 = None

    def eval(self, u: np.ndarray):
        g = self.grid
        uhat = _fft.fftn(u)
        d1u = deriv(g, u, 0)
        E = energy_array(g, u, uhat)
        gE = energy_gradient(g, u, None, uhat)
        gp = 1j * d1u
        p = 0.5 * inner(g, gp, u)  # the anchor term integrates to zero on the torus
        return E, p, gE, gp, uhat, d1u

    def Q(self, a: np.ndarray, d1a: np.ndarray, b: np.ndarray) -> float:
        """Bilinear momentum form 1/2 <i d1 a, b>."""
        return 0.5 * inner(self.grid, 1j * d1a, b)


def retract(grid: Grid, u: np.ndarray, target: float, precond: _Precond | None = None,
            tol: float = 1e-12, max_steps: int = 50) -> np.ndarray:
    """Move u along the preconditioned momentum gradient until p(u) = target."""
    prob = _Problem(grid)
    precond = precond or _Precond(grid, 2.0, 1.0)
    for _ in range(max_steps):
        d1u = deriv(grid, u, 0)
        p = prob.Q(u, d1u, u)
        if abs(p - target) <= tol * max(1.0, abs(target)):
            return u
        w = precond(u, 1j * d1u)
        d1w = deriv(grid, w, 0)
        s = _quad_root(prob.Q(w, d1w, w), 2 * prob.Q(u, d1u, w), p - target)
        if s is None:
            # no exact root along w: take the Newton step, damped
            s = -(p - target) / (2 * prob.Q(u, d1u, w))
            s = float(np.clip(s, -1.0, 1.0))
        u = u + s * w
    raise RuntimeError("momentum retraction did not converge")


def minimize_at_momentum(cfg: MinimizeConfig, grid: Grid, u0: Field | None = None,
                         callback=None) -> BranchPoint:
    """Minimize E at fixed p by preconditioned, projected descent on {p = target}."""
    if grid.dim == 1:
        raise ValueError("minimization is for dim >= 2; use the closed forms in 1D")
    if max(grid.spacing) > 0.5 * SQRT2:
        log.warning("grid spacing %.3g exceeds half a healing length", max(grid.spacing))
    if cfg.target_p == 0:
        one = Field(grid, np.ones(grid.shape, complex))
        return _finish(cfg, grid, one.values, 0, STATUS_CONVERGED, 0.0, 0.0, [])

    u = (u0 if u0 is not None else initial_field(cfg, grid)).values.astype(complex)
    P = _Precond(grid, cfg.precond_mass, cfg.phase_boost)
    u = retract(grid, u, cfg.target_p, P)
    prob = _Problem(grid)

    hist = []
    t = cfg.step
    d_prev = r_prev = z_prev = None
    status = STATUS_MAXITER
    cmult, res = float("nan"), float("inf")
    it = 0
    for it in range(cfg.max_iters + 1):
        E, p, gE, gp, uhat, d1u = prob.eval(u)
        hist.append(E)
        gpgp = inner(grid, gp, gp)
        cmult = inner(grid, gE, gp) / gpgp
        gnorm = math.sqrt(inner(grid, gE, gE))
        res = math.sqrt(max(inner(grid, gE - cmult * gp, gE - cmult * gp), 0.0)) / max(gnorm, 1e-300)
        if callback is not None:
            callback(it, E, p, cmult, res)
        eta_max = float(np.max(np.abs(1.0 - np.abs(u) ** 2)))
        if E < 1e-10 or eta_max < cfg.trivial_eta:
            status = STATUS_TRIVIAL
            break
        if res <= cfg.grad_tol and abs(p - cfg.target_p) <= cfg.constraint_tol:
            status = STATUS_CONVERGED
            break
        if it == cfg.max_iters:
            break

        PgE = P(u, gE)
        Pgp = P(u, gp)
        lam = inner(grid, gE, Pgp) / inner(grid, gp, Pgp)
        z = PgE - lam * Pgp  # preconditioned tangent gradient
        r = gE - lam * gp
        d = -z
        if cfg.method == "cg" and d_prev is not None:
            beta = inner(grid, r, z - z_prev) / max(inner(grid, r_prev, z_prev), 1e-300)
            beta = max(0.0, beta)
            d = -z + beta * d_prev
            d = d - inner(grid, gp, d) / inner(grid, gp, Pgp) * Pgp
            if inner(grid, gE, d) >= 0:
                d = -z
        slope = inner(grid, gE, d)

        # everything along the search plane u + t d + s w is a quadratic form in (t, s)
        w = Pgp
        dhat, what = _fft.fftn(d), _fft.fftn(w)
        d1d, d1w = deriv(grid, d, 0), deriv(grid, w, 0)
        Quu, Qud, Qdd = p, prob.Q(u, d1u, d), prob.Q(d, d1d, d)
        Quw, Qdw, Qww = prob.Q(u, d1u, w), prob.Q(d, d1d, w), prob.Q(w, d1w, w)
        kin = lambda a, b: float(np.sum(prob.k2 * (a.conj() * b).real)) * prob.dv / u.size
        Kud, Kdd = kin(uhat, dhat), kin(dhat, dhat)
        Kuw, Kdw, Kww = kin(uhat, what), kin(dhat, what), kin(what, what)

        eta_u = 1.0 - np.abs(u) ** 2

        def trial(tt):
            # returns the energy change, computed without cancellation against E
            pv = Quu + 2 * tt * Qud + tt * tt * Qdd
            s = _quad_root(Qww, 2 * (Quw + tt * Qdw), pv - cfg.target_p)
            if s is None:
                return None, None
            delta = tt * d + s * w
            q = 2.0 * (np.conj(u) * delta).real + np.abs(delta) ** 2
            dk = 2 * (tt * Kud + s * Kuw + tt * s * Kdw) + Kdd * tt * tt + Kww * s * s
            dE = 0.5 * dk + 0.25 * integrate(grid, -q * (2.0 * eta_u - q))
            # discount the cost of restoring round-off drift of p, which is c (target - p)
            return dE + cmult * (Quu - cfg.target_p), u + delta

        if cfg.step_rule == "fixed":
            dE, v = trial(cfg.step)
            if dE is None or dE > 0:
                status = STATUS_STALLED
                break
        else:
            accepted = False
            for _ in range(60):
                dE, v = trial(t)
                if dE is not None and dE <= 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                status = STATUS_STALLED
                break
            # probe a longer step when the first trial was accepted
            grown = min(t * 2.0, 1e3)
            dE2, v2 = trial(grown)
            if dE2 is not None and dE2 < dE:
                v, t = v2, grown
        u = v
        if cfg.correct_every and (it + 1) % cfg.correct_every == 0:
            u = retract(grid, u, cfg.target_p, P, tol=cfg.constraint_tol * 1e-2)
        d_prev, r_prev, z_prev = d, r, z

    return _finish(cfg, grid, u, it, status, cmult, res, hist)


def _finish(cfg, grid, u, it, status, cmult, res, hist) -> BranchPoint:
    if cfg.recenter:
        u = recenter(grid, u)
    f = Field(grid, u)
    E = energy_array(grid, u)
    p = momentum_array(grid, u)
    poh = pohozaev_residuals(f, cmult) if status != STATUS_TRIVIAL and math.isfinite(cmult) else (0.0, 0.0)
    vort = detect_vortices(f) if grid.dim == 2 else []
    if status == STATUS_CONVERGED and not (0 < cmult < SQRT2) and cfg.target_p > 0:
        status = "flagged-speed"
    return BranchPoint(p=p, E=E, c=cmult, field_path=None, pohozaev=poh, vortices=vort, status=status,
                       iters=it, target_p=cfg.target_p, residual=res, field=f, energy_history=hist)


def recenter(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Translate u spectrally so the circular |eta|-centroid sits at the origin.

    |eta| rather than eta: transonic fields have x1-lines with almost zero mean eta,
    which makes the signed centroid ill-conditioned.
    """
    eta = np.abs(1.0 - np.abs(u) ** 2)
    uhat = _fft.fftn(u)
    for ax in range(grid.dim):
        x = grid.coords()[ax]
        n = grid.ns[ax]
        m = np.sum(eta * np.exp(1j * x / n))
        if abs(m) < 1e-14 * np.sum(np.abs(eta)):
            continue
        a = n * np.angle(m)
        k = np.array(grid.wavenumbers(ax))
        phase = np.exp(1j * k * a)
        flat = phase.reshape(-1)
        N = grid.points[ax]
        flat[N // 2] = np.cos(k.reshape(-1)[N // 2] * a)
        uhat = uhat * phase
    return _fft.ifftn(uhat)


# ---------------------------------------------------------------- diagnostics

def pohozaev_residuals(f: Field, c: float) -> tuple[float, float]:
    g = f.grid
    if g.dim < 2:
        raise ValueError("Pohozaev identities need dim >= 2")
    u = f.values
    E = energy_array(g, u)
    uhat = _fft.fftn(u)
    parts = [float(np.sum(np.array(g.wavenumbers(ax)) ** 2 * np.abs(uhat) ** 2)) * g.cell_volume / u.size
             for ax in range(g.dim)]
    p = momentum_array(g, u)
    r1 = E - parts[0]
    r2 = E - float(np.mean(parts[1:])) - c * p
    return float(r1), float(r2)


def supersonic_identity_residual(f: Field, c: float) -> float:
    if c == 0:
        raise ValueError("identity involves 2/c^2; c = 0 is excluded")
    g = f.grid
    u = f.values
    val = kinetic(g, u) + integrate(g, (1.0 - np.abs(u) ** 2) ** 2)
    return float(val - 2 * c * (1 - 2 / c**2) * momentum_array(g, u))


def tw_residual(grid: Grid, u: np.ndarray, c: float) -> np.ndarray:
    """i c d1 u + Lap u + u (1 - |u|^2)."""
    k1 = np.array(grid.wavenumbers(0))
    return _fft.ifftn((-c * k1 - np.array(grid.ksq())) * _fft.fftn(u)) + u * (1.0 - np.abs(u) ** 2)


def _tw_linearized(grid: Grid, u: np.ndarray, w: np.ndarray, c: float) -> np.ndarray:
    # self-adjoint for the real inner product, so it is also the adjoint
    k1 = np.array(grid.wavenumbers(0))
    lin = _fft.ifftn((-c * k1 - np.array(grid.ksq())) * _fft.fftn(w))
    return lin + w * (1.0 - np.abs(u) ** 2) - 2.0 * u * np.real(np.conj(u) * w)


@dataclass
class RelaxationResult:
    field: Field
    energy: float
    residual: float
    iters: int


def supersonic_relaxation(f0: Field, c: float, max_iters: int = 3000) -> RelaxationResult:
    """Drive the travelling-wave residual to zero from f0 by preconditioned L-BFGS.

    The unknown is w with u - 1 = (2 + |xi|^2)^-1 w, which evens out the |xi|^4
    growth of the residual Hessian. Used to probe speeds c > sqrt2, where the only
    finite-energy travelling waves are constants.
    """
    g = f0.grid
    shape, dv = g.shape, g.cell_volume
    S = 1.0 / (2.0 + np.array(g.ksq()))
    smooth = lambda w: _fft.ifftn(S * _fft.fftn(w))
    split = lambda z: np.concatenate([z.real.ravel(), z.imag.ravel()])
    join = lambda x: x[: x.size // 2].reshape(shape) + 1j * x[x.size // 2:].reshape(shape)

    def fun(x):
        u = 1.0 + smooth(join(x))
        r = tw_residual(g, u, c)
        return 0.5 * float(np.sum(np.abs(r) ** 2)) * dv, split(smooth(_tw_linearized(g, u, r, c))) * dv

    w0 = _fft.ifftn(_fft.fftn(f0.values - 1.0) / S)
    res = optimize.minimize(fun, split(w0), jac=True, method="L-BFGS-B",
                            options={"maxiter": max_iters, "gtol": 1e-14, "ftol": 1e-18})
    u = 1.0 + smooth(join(res.x))
    r = tw_residual(g, u, c)
    return RelaxationResult(Field(g, u), energy_array(g, u), math.sqrt(inner(g, r, r)), int(res.nit))


def _bilinear_zero(q00, q10, q01, q11) -> tuple[float, float]:
    """Zero of the bilinear interpolant on the unit square (Newton from the centre)."""
    s = t = 0.5
    for _ in range(20):
        val = q00 * (1 - s) * (1 - t) + q10 * s * (1 - t) + q01 * (1 - s) * t + q11 * s * t
        ds = -q00 * (1 - t) + q10 * (1 - t) - q01 * t + q11 * t
        dt = -q00 * (1 - s) - q10 * s + q01 * (1 - s) + q11 * s
        J = np.array([[ds.real, dt.real], [ds.imag, dt.imag]])
        try:
            step = np.linalg.solve(J, [-val.real, -val.imag])
        except np.linalg.LinAlgError:
            break
        s, t = float(np.clip(s + step[0], 0, 1)), float(np.clip(t + step[1], 0, 1))
        if np.hypot(*step) < 1e-12:
            break
    return s, t


def detect_vortices(f: Field) -> list[tuple[tuple[float, float], int]]:
    """Plaquette phase winding; positions are zeros of the bilinear interpolant."""
    g = f.grid
    if g.dim != 2:
        raise ValueError("vortex detection is two-dimensional")
    u = f.values
    w = plaquette_winding(u)
    idx = np.argwhere(w != 0)
    h = g.spacing
    N0, N1 = g.points
    out = []
    for i, j in idx:
        i1, j1 = (i + 1) % N0, (j + 1) % N1
        s, t = _bilinear_zero(u[i, j], u[i1, j], u[i, j1], u[i1, j1])
        pos = (float(g.axis(0)[i] + s * h[0]), float(g.axis(1)[j] + t * h[1]))
        out.append((pos, int(w[i, j])))
    return out


def pair_separation(vortices) -> float | None:
    """Distance between the +1 and -1 vortices of a single pair."""
    plus = [p for p, d in vortices if d > 0]
    minus = [p for p, d in vortices if d < 0]
    if len(plus) != 1 or len(minus) != 1:
        return None
    return float(math.dist(plus[0], minus[0]))


def mirror_asymmetry(f: Field, axis: int = 1) -> float:
    """Energy-norm size of u - Ru, with R the reflection x_axis -> -x_axis."""
    g = f.grid
    u = f.values
    ru = np.roll(np.flip(u, axis=axis), 1, axis=axis)
    d = u - ru
    return float(0.5 * kinetic(g, d) + 0.25 * integrate(g, (np.abs(u) ** 2 - np.abs(ru) ** 2) ** 2))


# ---------------------------------------------------------------- branch sweeps

_BOX_TABLE = {1.0: (40.0, 160.0), 2.0: (30.0, 80.0), 3.0: (32.0, 48.0), 4.0: (32.0, 40.0), 5.0: (32.0, 32.0)}


def default_box(p: float) -> tuple[float, float]:
    """Half-period multipliers (n1, n2) of the 2D box used at momentum p with 256^2 points.

    Finite-box corrections of the Pohozaev identities scale like 1 / L^2 with the
    long, algebraically decaying tails, so small p (wide, flat waves) needs larger
    boxes: n1 ~ 1/p and n2 ~ 1/p^2 below p = 1, tabulated in between.
    """
    if p <= 0:
        raise ValueError("momentum must be positive")
    if p <= 1:
        return (40.0 / p, 160.0 / p**2)
    if p >= 5:
        return (32.0, 32.0)
    keys = sorted(_BOX_TABLE)
    n1 = float(np.interp(p, keys, [_BOX_TABLE[k][0] for k in keys]))
    n2 = float(np.interp(p, keys, [_BOX_TABLE[k][1] for k in keys]))
    return (n1, n2)


def default_grid(p: float, points: int = 256) -> Grid:
    return Grid(2, default_box(p), (points, points))


def resample_field(f: Field, grid: Grid) -> Field:
    """Trigonometric interpolation of u - 1 onto another grid; u = 1 outside the old box."""
    from .kp1 import spectral_resample

    if f.grid == grid:
        return f
    if f.grid.dim != grid.dim:
        raise ValueError("grids have different dimensions")
    axes = [grid.axis(i) for i in range(grid.dim)]
    d = f.values - 1.0
    vals = spectral_resample(f.grid, d.real, axes) + 1j * spectral_resample(f.grid, d.imag, axes)
    inside = np.ones(grid.shape, bool)
    for i, x in enumerate(grid.coords()):
        inside &= np.abs(x) < np.pi * f.grid.ns[i]
    return Field(grid, 1.0 + np.where(inside, vals, 0.0))


def branch_checks(points: list[BranchPoint], tol: float = 1e-6) -> dict:
    """Properties of the discrete E_min(p) curve on the converged points."""
    pts = sorted([b for b in points if b.status == STATUS_CONVERGED], key=lambda b: b.p)
    p = np.array([b.p for b in pts])
    E = np.array([b.E for b in pts])
    c = np.array([b.c for b in pts])
    out = {"n": len(pts)}
    out["below_sound_line"] = bool(np.all(E <= SQRT2 * p + tol))
    if len(pts) >= 2:
        dE, dp = np.diff(E), np.diff(p)
        out["lipschitz"] = bool(np.all(np.abs(dE) <= SQRT2 * np.abs(dp) + tol))
        out["increasing"] = bool(np.all(dE > -tol))
        out["speed_decreasing"] = bool(np.all(np.diff(c) <= tol))
    if len(pts) >= 3:
        slopes = np.diff(E) / np.diff(p)
        out["concave"] = bool(np.all(np.diff(slopes) <= tol))
    out["subsonic"] = bool(np.all((c > 0) & (c < SQRT2)))
    slope_ok = [abs(b.c - b.c_slope) <= 0.05 * abs(b.c_slope) for b in pts if math.isfinite(b.c_slope)]
    if slope_ok:
        out["slope_matches_multiplier"] = bool(all(slope_ok))
    return out


def trace_branch(p_values, grid=None, cfg: MinimizeConfig | None = None, slope_step: float | None = 0.05,
                 warm_start: bool = True, callback=None) -> list[BranchPoint]:
    """Solve along increasing p, warm-starting each point from the previous minimizer.

    ``grid`` is a Grid shared by all points or a callable p -> Grid (default_grid).
    With ``slope_step`` the slope dE/dp is also measured from solves at p +- step
    on the same grid. Failures are recorded per point and do not stop the sweep.
    """
    ps = [float(p) for p in p_values]
    if ps != sorted(ps):
        raise ValueError("p_values must be increasing")
    if not ps:
        return []
    grid_of = grid if callable(grid) else (lambda p: grid) if grid is not None else default_grid
    base = cfg or MinimizeConfig(target_p=ps[0])
    out: list[BranchPoint] = []
    prev: Field | None = None
    for p in ps:
        g = grid_of(p)
        c_p = _replace_cfg(base, target_p=p)
        u0 = resample_field(prev, g) if (warm_start and prev is not None) else None
        try:
            bp = minimize_at_momentum(c_p, g, u0=u0)
            if warm_start and u0 is not None and bp.status != STATUS_CONVERGED:
                # a poor warm start can stall; retry from the ansatz
                bp2 = minimize_at_momentum(c_p, g)
                if bp2.status == STATUS_CONVERGED or bp2.E < bp.E:
                    bp = bp2
        except (ValueError, RuntimeError) as exc:
            log.warning("branch point p=%g failed: %s", p, exc)
            bp = BranchPoint(p=float("nan"), E=float("nan"), c=float("nan"), field_path=None,
                             pohozaev=(float("nan"), float("nan")), vortices=[], status=f"error: {exc}",
                             iters=0, target_p=p, residual=float("nan"))
        if slope_step and bp.status == STATUS_CONVERGED:
            bp.c_slope = _slope(base, g, bp, slope_step)
        if bp.field is not None and bp.status == STATUS_CONVERGED:
            prev = bp.field
        out.append(bp)
        if callback is not None:
            callback(bp)
    checks = branch_checks(out)
    for k, v in checks.items():
        if v is False:
            log.warning("branch check failed: %s", k)
    return out


def _replace_cfg(cfg: MinimizeConfig, **kw) -> MinimizeConfig:
    d = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    d.update(kw)
    return MinimizeConfig(**d)


def _slope(cfg: MinimizeConfig, grid: Grid, bp: BranchPoint, h: float) -> float:
    Es = []
    for q in (bp.target_p - h, bp.target_p + h):
        side = minimize_at_momentum(_replace_cfg(cfg, target_p=q), grid, u0=bp.field)
        if side.status != STATUS_CONVERGED:
            return float("nan")
        Es.append(side.E)
    return (Es[1] - Es[0]) / (2 * h)


def write_branch_csv(points: list[BranchPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BRANCH_COLUMNS)
        for b in points:
            row = b.row()
            w.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, int) else "%.17g" % v)
                        for v in (row[k] for k in BRANCH_COLUMNS)])


# ---------------------------------------------------------------- obstacle problem

@dataclass(frozen=True)
class TrustRegion:
    """Energy caps: minimizers are sought with E_n < lam and expected below kappa.

    ``gate`` bounds the L2 norm of admissible potentials.
    """

    lam: float
    kappa: float
    gate: float

    def __post_init__(self):
        if not 0 < self.kappa < self.lam:
            raise ValueError("need 0 < kappa < lambda")
        if self.gate < 0:
            raise ValueError("gate must be non-negative")


def trust_region_defaults(c: float, shrink: float = 0.25) -> TrustRegion:
    """Constants satisfying the ordering c/sqrt2 < d2 < d0 < d1 < 1, d_c/d2 < mu < 1.

    lam = shrink * d0 (d1 - d0), kappa = lam / (1 + 2 mu) and the gate is the largest
    K with K^2 < 4 (1 - mu) (mu - d_c/d2) kappa.
    """
    if not 0 < c < SQRT2:
        raise ValueError("speed must lie in (0, sqrt2)")
    dc = c / SQRT2
    d0 = (dc + 1) / 2
    d1 = (d0 + 1) / 2
    d2 = (dc + d0) / 2
    mu = (dc / d2 + 1) / 2
    lam = shrink * d0 * (d1 - d0)
    kappa = lam / (1 + 2 * mu)
    gate = math.sqrt(4 * (1 - mu) * (mu - dc / d2) * kappa)
    return TrustRegion(lam, kappa, gate)


STATUS_TOO_STRONG = "potential too strong"


@dataclass
class HamiltonianResult:
    field: Field
    F: float
    E: float
    EV: float
    p: float
    c: float
    residual: float
    status: str
    iters: int
    vortices: list = dc_field(default_factory=list)

    def summary(self) -> dict:
        return {"F": self.F, "E": self.E, "EV": self.EV, "p": self.p, "c": self.c,
                "residual": self.residual, "status": self.status, "iters": self.iters,
                "n_vortices": len(self.vortices)}


def local_minimize_hamiltonian(c: float, V: Potential, tr: TrustRegion | None = None, grid: Grid | None = None,
                               tol: float = 1e-8, max_iters: int = 20000, u0: Field | None = None) -> HamiltonianResult:
    """Minimize F = E^V - c p from the constant 1 inside {E_n < lam}.

    Preconditioned nonlinear CG with Armijo backtracking; steps that leave the trust
    region are halved. ``tol`` bounds the L2 norm of grad F.
    """
    grid = grid or V.grid
    if V.grid != grid:
        raise ValueError("potential lives on a different grid")
    if not 0 < c < SQRT2:
        raise ValueError("speed must lie in (0, sqrt2)")
    tr = tr or trust_region_defaults(c)
    if V.l2_norm >= tr.gate:
        log.warning("potential norm %.3g exceeds the smallness gate %.3g", V.l2_norm, tr.gate)
    Vv = V.values
    P = _Precond(grid, 2.0, 1.0)
    u = np.ones(grid.shape, complex) if u0 is None else u0.values.astype(complex)

    def F_of(v):
        return energy_array(grid, v) - 0.5 * integrate(grid, Vv * (1 - np.abs(v) ** 2)) - c * momentum_array(grid, v)

    F = F_of(u)
    d_prev = z_prev = r_prev = None
    status = "non-convergence"
    t = 1.0
    res = float("inf")
    it = 0
    for it in range(max_iters + 1):
        gF = hamiltonian_gradient(grid, u, Vv, c)
        res = math.sqrt(inner(grid, gF, gF))
        if res <= tol:
            status = STATUS_CONVERGED
            break
        if it == max_iters:
            break
        z = P(u, gF)
        d = -z
        if d_prev is not None:
            beta = max(0.0, inner(grid, gF, z - z_prev) / max(inner(grid, r_prev, z_prev), 1e-300))
            d = -z + beta * d_prev
            if inner(grid, gF, d) >= 0:
                d = -z
        slope = inner(grid, gF, d)
        accepted = False
        for _ in range(60):
            v = u + t * d
            if energy_array(grid, v) < tr.lam:
                Fv = F_of(v)
                if Fv - F <= 1e-4 * t * slope:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # either the step cannot be kept inside the trust region or F cannot decrease
            status = STATUS_TOO_STRONG if energy_array(grid, u + 1e-12 * d) >= tr.lam else STATUS_STALLED
            break
        v2 = u + 2 * t * d
        if energy_array(grid, v2) < tr.lam:
            F2 = F_of(v2)
            if F2 < Fv:
                v, Fv, t = v2, F2, 2 * t
        u, F = v, Fv
        d_prev, z_prev, r_prev = d, z, gF
    f = Field(grid, u)
    E = energy_array(grid, u)
    EV = E - 0.5 * integrate(grid, Vv * (1 - np.abs(u) ** 2))
    if status == STATUS_CONVERGED and E >= tr.kappa:
        status = "outside-kappa"
    vort = detect_vortices(f) if grid.dim == 2 else []
    return HamiltonianResult(f, float(F_of(u)), float(E), float(EV), float(momentum_array(grid, u)), c,
                             float(res), status, it, vort)

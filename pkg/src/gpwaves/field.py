"""Periodic spectral fields on the torus [-pi n, pi n]^d.

Array layout: values are stored row-major with array axis 0 holding x1, the
propagation direction; axis 1 holds x2 and axis 2 holds x3.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import _fft


class LiftingError(ValueError):
    """Raised when a field has zeros or phase winding and admits no global lifting."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; axis i spans [-pi n_i, pi n_i) with points[i] samples.

    ``n`` may be a scalar (isotropic torus) or one value per axis.
    """

    dim: int
    n: float | tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        pts = (self.points,) * self.dim if np.isscalar(self.points) else tuple(self.points)
        pts = tuple(int(p) for p in pts)
        if len(pts) != self.dim:
            raise ValueError("points must have one entry per axis")
        for p in pts:
            if p < 8 or p & (p - 1):
                raise ValueError(f"points per axis must be a power of two >= 8, got {p}")
        ns = (self.n,) * self.dim if np.isscalar(self.n) else tuple(self.n)
        if len(ns) != self.dim or any(not v > 0 for v in ns):
            raise ValueError("n must be positive (one value or one per axis)")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "n", float(ns[0]) if len(set(ns)) == 1 else tuple(float(v) for v in ns))

    @property
    def ns(self) -> tuple[float, ...]:
        return (self.n,) * self.dim if np.isscalar(self.n) else self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(2 * np.pi * v for v in self.ns)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / p for L, p in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis(self, i: int) -> np.ndarray:
        """1D coordinates along axis i; x=0 sits at index points[i]//2."""
        return -np.pi * self.ns[i] + self.spacing[i] * np.arange(self.points[i])

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        return [_broadcast(self.axis(i), i, self.dim) for i in range(self.dim)]

    def mesh(self) -> list[np.ndarray]:
        return [np.broadcast_to(x, self.shape) for x in self.coords()]

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.coords()))

    def wavenumbers(self, i: int) -> np.ndarray:
        """Frequencies k/n_i along axis i, broadcastable."""
        return _wavenumbers(self, i)

    def ksq(self) -> np.ndarray:
        return _ksq(self)

    def with_points(self, points) -> "Grid":
        return Grid(self.dim, self.n, points)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n if np.isscalar(self.n) else list(self.n),
                "points": list(self.points)}


def _broadcast(v: np.ndarray, i: int, dim: int) -> np.ndarray:
    shape = [1] * dim
    shape[i] = v.size
    return v.reshape(shape)


@functools.lru_cache(maxsize=64)
def _wavenumbers(grid: Grid, i: int) -> np.ndarray:
    N = grid.points[i]
    k = np.fft.fftfreq(N, d=1.0 / N) / grid.ns[i]
    out = _broadcast(k, i, grid.dim)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _ksq(grid: Grid) -> np.ndarray:
    out = sum(grid.wavenumbers(i) ** 2 for i in range(grid.dim))
    out = np.broadcast_to(out, grid.shape).copy()
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _odd_symbol(grid: Grid, i: int) -> np.ndarray:
    # first-derivative symbol with the Nyquist mode removed (keeps real fields real)
    k = np.array(grid.wavenumbers(i), copy=True)
    N = grid.points[i]
    flat = k.reshape(-1)
    flat[N // 2] = 0.0
    k.setflags(write=False)
    return k


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.size != int(np.prod(self.grid.shape)):
            raise ValueError("field length does not match grid")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def replace(self, values) -> "Field":
        return Field(self.grid, values)


@dataclass(frozen=True, eq=False)
class Potential:
    grid: Grid
    values: np.ndarray
    l2_norm: float = dc_field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "l2_norm", float(np.sqrt(integrate(self.grid, v**2))))


def gaussian_potential(grid: Grid, amplitude: float, width: float, center=None) -> Potential:
    center = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    r2 = sum((x - x0) ** 2 for x, x0 in zip(grid.coords(), center))
    return Potential(grid, amplitude * np.exp(-r2 / width**2))


def constant_field(grid: Grid, value: complex = 1.0) -> Field:
    return Field(grid, np.full(grid.shape, value, dtype=complex))


# ---------------------------------------------------------------- quadrature

def integrate(grid: Grid, a: np.ndarray) -> float:
    """Uniform Riemann sum over the torus."""
    return float(np.sum(a)) * grid.cell_volume


def inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Real L2 inner product <a, b> = Re int a conj(b)."""
    return float(np.sum((a.conj() * b).real)) * grid.cell_volume


# ---------------------------------------------------------------- derivatives

def deriv(grid: Grid, u: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Spectral derivative of a raw array."""
    k = _odd_symbol(grid, axis) if order % 2 else grid.wavenumbers(axis)
    out = _fft.ifftn(((1j * k) ** order) * _fft.fftn(u))
    return out.real if np.isrealobj(u) else out


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    out = _fft.ifftn(-grid.ksq() * _fft.fftn(u))
    return out.real if np.isrealobj(u) else out


def spectral_derivative(f: Field, axis: int, order: int = 1) -> Field:
    if not 0 <= axis < f.grid.dim:
        raise ValueError("axis out of range")
    return f.replace(deriv(f.grid, f.values, axis, order))


# ---------------------------------------------------------------- functionals

def kinetic(grid: Grid, u: np.ndarray, uhat=None) -> float:
    """int |grad u|^2 evaluated in frequency space."""
    uhat = _fft.fftn(u) if uhat is None else uhat
    return float(np.sum(grid.ksq() * np.abs(uhat) ** 2)) * grid.cell_volume / u.size


def energy_array(grid: Grid, u: np.ndarray, uhat=None) -> float:
    eta = 1.0 - np.abs(u) ** 2
    return 0.5 * kinetic(grid, u, uhat) + 0.25 * integrate(grid, eta**2)


def momentum_array(grid: Grid, u: np.ndarray, d1u=None) -> float:
    d1u = deriv(grid, u, 0) if d1u is None else d1u
    return 0.5 * inner(grid, 1j * d1u, u - 1.0)


def energy_gradient(grid: Grid, u: np.ndarray, V=None, uhat=None) -> np.ndarray:
    """L2 gradient of E (or E^V): -Lap u - u(1 - |u|^2 - V)."""
    uhat = _fft.fftn(u) if uhat is None else uhat
    lap = _fft.ifftn(-grid.ksq() * uhat)
    g = 1.0 - np.abs(u) ** 2
    if V is not None:
        g = g - V
    return -lap - u * g


def momentum_gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    return 1j * deriv(grid, u, 0)


def energy(f: Field) -> float:
    return energy_array(f.grid, f.values)


def momentum(f: Field) -> float:
    return momentum_array(f.grid, f.values)


def mass(f: Field) -> float:
    return 0.5 * integrate(f.grid, np.abs(f.values) ** 2 - 1.0)


def _check_grid(f: Field, V: Potential):
    if f.grid != V.grid:
        raise ValueError("field and potential live on different grids")


def energy_with_potential(f: Field, V: Potential) -> float:
    _check_grid(f, V)
    return energy(f) - 0.5 * integrate(f.grid, V.values * (1.0 - np.abs(f.values) ** 2))


def hamiltonian(f: Field, V: Potential | None, c: float) -> float:
    if c < 0:
        raise ValueError("c must be non-negative")
    e = energy(f) if V is None else energy_with_potential(f, V)
    return e - c * momentum(f)


def hamiltonian_gradient(grid: Grid, u: np.ndarray, V, c: float) -> np.ndarray:
    Vv = None if V is None else (V.values if isinstance(V, Potential) else V)
    return energy_gradient(grid, u, Vv) - c * momentum_gradient(grid, u)


# ---------------------------------------------------------------- phase

def wrapped_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Phase increment from a to b in (-pi, pi]."""
    return np.angle(b * np.conj(a))


def min_modulus(f: Field) -> float:
    return float(np.min(np.abs(f.values)))


def plaquette_winding(u: np.ndarray) -> np.ndarray:
    """Integer winding of the phase around each periodic plaquette of a 2D array.

    Entry [i, j] is the winding around the square with lower-left corner (i, j).
    """
    a = u
    b = np.roll(u, -1, axis=0)
    c = np.roll(b, -1, axis=1)
    d = np.roll(u, -1, axis=1)
    total = wrapped_diff(a, b) + wrapped_diff(b, c) + wrapped_diff(c, d) + wrapped_diff(d, a)
    return np.rint(total / (2 * np.pi)).astype(int)


def lifting(f: Field, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Return (rho, phi) with f = rho exp(i phi) and phi single valued on the torus."""
    u = f.values
    rho = np.abs(u)
    if rho.min() <= tol:
        raise LiftingError("field vanishes; no lifting")
    dim = f.grid.dim
    for ax in range(dim):
        wind = np.sum(wrapped_diff(u, np.roll(u, -1, axis=ax)), axis=ax) / (2 * np.pi)
        if np.any(np.abs(wind) > 0.5):
            raise LiftingError(f"nonzero phase winding along axis {ax}")
    if dim >= 2:
        for a0, a1 in [(0, 1), (0, 2), (1, 2)][: 1 if dim == 2 else 3]:
            w = plaquette_winding(np.moveaxis(u, (a0, a1), (0, 1)))
            if np.any(w != 0):
                raise LiftingError("vortices present; no lifting")
    phi = np.empty(u.shape)
    idx0 = (0,) * dim
    phi[idx0] = np.angle(u[idx0])
    # integrate axis by axis from the origin corner
    for ax in range(dim):
        sl = tuple(slice(None) if a < ax else (slice(None) if a == ax else 0) for a in range(dim))
        line = u[sl]
        inc = wrapped_diff(line[(slice(None),) * ax + (slice(0, -1),)],
                           line[(slice(None),) * ax + (slice(1, None),)])
        base = phi[tuple(slice(None) if a < ax else 0 for a in range(dim))]
        base = np.expand_dims(base, ax)
        seg = np.concatenate([base, base + np.cumsum(inc, axis=ax)], axis=ax)
        phi[sl] = seg
    return rho, phi


# ---------------------------------------------------------------- twisted 1D embedding

@dataclass(frozen=True)
class TwistInfo:
    """Bookkeeping for a 1D wave placed on the torus with a uniform phase twist.

    The field is exp(i k x) v_c(x - shift) with k = -jump/L, which is periodic up to
    exponentially small tails. ``energy_correction`` and ``momentum_correction`` are
    the quadrature values of the twist terms, so that
    energy(field) = E(v_c) + energy_correction and
    momentum(field) = p(v_c) + momentum_correction.
    """

    c: float
    k: float
    phase_jump: float
    energy_correction: float
    momentum_correction: float


def twisted_wave(grid: Grid, c: float, shift: float = 0.0, k: float | None = None) -> tuple[Field, TwistInfo]:
    """Embed the 1D travelling wave of speed c into a periodic 1D grid.

    A uniform twist is used rather than a localized ramp: exp(i k x) v_c is, up to a
    global phase, an exact travelling wave of speed c - 2k (Galilean boost), so the
    embedding radiates nothing under the time evolution.
    """
    from .analytic1d import Wave1D, eval_vc, eval_eta, phase_jump

    if grid.dim != 1:
        raise ValueError("twisted embedding is one-dimensional")
    w = Wave1D(c)
    L = grid.lengths[0]
    jump = phase_jump(w)
    if k is None:
        k = -jump / L
    x = grid.axis(0)
    v = eval_vc(w, x - shift)
    u = np.exp(1j * k * x) * v
    eta = eval_eta(w, x - shift)
    dx = grid.spacing[0]
    # rho^2 phi' = c eta / 2 for the exact wave
    ecorr = float(np.sum(0.5 * k**2 * (1.0 - eta) + k * c * eta / 2.0)) * dx
    pcorr = float(np.sum(0.5 * k * eta)) * dx
    return Field(grid, u), TwistInfo(c, k, jump, ecorr, pcorr)


# ---------------------------------------------------------------- binary format

GPWV_MAGIC = b"GPWV"
GPWV_VERSION = 1
# version 2 stores one float64 n per axis, for anisotropic or non-integer boxes
GPWV_VERSION_ANISO = 2


def write_gpwv(path, f: Field) -> None:
    g = f.grid
    ns = g.ns
    if all(v == ns[0] for v in ns) and float(ns[0]) == int(ns[0]):
        header = GPWV_MAGIC + struct.pack("<IBQ", GPWV_VERSION, g.dim, int(ns[0]))
    else:
        header = GPWV_MAGIC + struct.pack("<IB", GPWV_VERSION_ANISO, g.dim)
        header += struct.pack("<" + "d" * g.dim, *(float(v) for v in ns))
    header += struct.pack("<" + "Q" * g.dim, *g.points)
    data = np.ascontiguousarray(f.values, dtype="<c16").tobytes(order="C")
    Path(path).write_bytes(header + data)


def read_gpwv(path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < 9 or raw[:4] != GPWV_MAGIC:
        raise ValueError("not a GPWV file")
    version, dim = struct.unpack_from("<IB", raw, 4)
    off = 9
    if dim < 1:
        raise ValueError("GPWV header has dim 0")
    try:
        if version == GPWV_VERSION:
            (n,) = struct.unpack_from("<Q", raw, off)
            off += 8
        elif version == GPWV_VERSION_ANISO:
            n = struct.unpack_from("<" + "d" * dim, raw, off)
            off += 8 * dim
        else:
            raise ValueError(f"unsupported GPWV version {version}")
        sizes = struct.unpack_from("<" + "Q" * dim, raw, off)
    except struct.error:
        raise ValueError("truncated GPWV header") from None
    off += 8 * dim
    count = int(np.prod(sizes))
    if len(raw) - off != 16 * count:
        raise ValueError("GPWV payload length does not match header")
    vals = np.frombuffer(raw, dtype="<c16", count=count, offset=off).astype(complex)
    return Field(Grid(dim, n, tuple(sizes)), vals.reshape(sizes))

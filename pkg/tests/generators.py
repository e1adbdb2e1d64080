"""Random test fields shared by the unit and acceptance suites."""

import math

import numpy as np

from gpwaves.analytic1d import SampledProfile1D

SQ2 = math.sqrt(2)


def vanishing_field(seed):
    """Random smooth 1D field, |v| -> 1 at both ends, forced to vanish at one point."""
    rng = np.random.default_rng(seed)
    L, h = 40.0, 0.01
    x = np.arange(-L, L + h / 2, h)
    x0 = rng.uniform(-5, 5)
    width = rng.uniform(0.3, 3.0)
    v = np.tanh((x - x0) / (SQ2 * width)).astype(complex)
    for _ in range(rng.integers(0, 4)):
        a = rng.normal(0, 0.4) + 1j * rng.normal(0, 0.4)
        xc, s = rng.uniform(-8, 8), rng.uniform(0.5, 3)
        v = v + a * np.exp(-((x - xc) ** 2) / s**2)
    # subtract a bump so the field has a zero exactly at x0
    v = v - v[np.argmin(np.abs(x - x0))] * np.exp(-((x - x[np.argmin(np.abs(x - x0))]) ** 2))
    v = v * np.exp(1j * rng.uniform(0, 2) * np.tanh(x / rng.uniform(1, 5)))
    return SampledProfile1D(x, v)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpwaves.field import Field, Grid, constant_field
from gpwaves.kernels import (
    FarFieldCoeffs,
    KernelSymbol,
    SingularSymbolError,
    algebraic_kernel,
    denominator_min_on_sphere,
    farfield_coeffs,
    farfield_profile,
    fit_farfield,
    k0_l2_norm_sq,
    k0_l2_norm_sq_quadrature,
    riesz_kernel,
    sphere_rule,
    symbol_eval,
    toy_decay_iteration,
)

SQ2 = math.sqrt(2)
freq = st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3)


def test_symbol_examples():
    assert symbol_eval(KernelSymbol("K0", 2, 0.0), [1.0, 0.0]) == pytest.approx(1 / 3)
    assert symbol_eval(KernelSymbol("Rjk", 3, 0.5, 1, 1), [1.0, 0.0, 0.0]) == 1.0


def test_symbol_validation():
    with pytest.raises(ValueError):
        KernelSymbol("K0", 2, 0.5, 1)
    with pytest.raises(ValueError):
        KernelSymbol("Kj", 2, 0.5, 3)
    with pytest.raises(ValueError):
        KernelSymbol("Zz", 2, 0.5)
    with pytest.raises(SingularSymbolError):
        symbol_eval(KernelSymbol("Rjk", 2, 0.5, 1, 2), [0.0, 0.0])
    # supersonic: D vanishes on the x1 axis at |xi|^2 = c^2 - 2
    with pytest.raises(SingularSymbolError):
        symbol_eval(KernelSymbol("K0", 2, 1.6), [math.sqrt(1.6**2 - 2), 0.0])


def test_kj_is_riesz_times_k0():
    rng = np.random.default_rng(0)
    xi = rng.normal(size=(100, 3))
    for j in (1, 2, 3):
        kj = symbol_eval(KernelSymbol("Kj", 3, 0.9, j), xi)
        rk = symbol_eval(KernelSymbol("Rjk", 3, 0.9, 1, j), xi) * symbol_eval(KernelSymbol("K0", 3, 0.9), xi)
        assert np.allclose(kj, rk, rtol=1e-13, atol=0)


@given(freq, freq, freq, st.floats(0, 1.4))
def test_symbol_parities(a, b, d, c):
    xi = np.array([a, b, d])
    flip1 = xi * [-1, 1, 1]
    flip2 = xi * [1, -1, 1]
    K0 = KernelSymbol("K0", 3, c)
    assert symbol_eval(K0, flip1) == pytest.approx(symbol_eval(K0, xi), rel=1e-12)
    assert symbol_eval(K0, flip2) == pytest.approx(symbol_eval(K0, xi), rel=1e-12)
    K2 = KernelSymbol("Kj", 3, c, 2)
    assert symbol_eval(K2, flip1) == pytest.approx(-symbol_eval(K2, xi), rel=1e-12)
    assert symbol_eval(K2, flip2) == pytest.approx(-symbol_eval(K2, xi), rel=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("c", [0.0, 0.5, 1.0, 1.3])
def test_k0_norm_closed_form_vs_quadrature(dim, c, oracle):
    ref = next(r["value"] for r in oracle["k0_norm_sq"] if r["dim"] == dim and r["c"] == c)
    assert k0_l2_norm_sq(c, dim) == pytest.approx(ref, rel=1e-10)
    assert k0_l2_norm_sq_quadrature(c, dim) == pytest.approx(ref, rel=1e-4)


def test_k0_norm_examples():
    assert k0_l2_norm_sq(0.0, 2) == pytest.approx(math.pi / 2)
    assert k0_l2_norm_sq(SQ2 - 1e-12, 3) == pytest.approx(math.pi**2 * (math.pi / 2) / SQ2, rel=1e-5)
    assert k0_l2_norm_sq(SQ2 - 1e-7, 2) > 1e3


@pytest.mark.parametrize("dim", [2, 3])
def test_k0_ball_quadrature_converges(dim):
    full = k0_l2_norm_sq(0.8, dim)
    errs = [abs(k0_l2_norm_sq_quadrature(0.8, dim, R) - full) for R in (10.0, 100.0, 1000.0)]
    assert errs[0] > errs[1] > errs[2]
    if dim == 2:
        assert errs[2] / full < 1e-4


def test_denominator_on_spheres():
    for r in (0.01, 0.5, 3.0):
        assert denominator_min_on_sphere(1.0, 3, r) > 0
    c = 1.6
    r0 = math.sqrt(c * c - 2)
    assert abs(denominator_min_on_sphere(c, 2, r0)) < 1e-12
    assert abs(denominator_min_on_sphere(c, 3, r0)) < 1e-12
    assert denominator_min_on_sphere(c, 2, 0.3 * r0) < 0
    assert denominator_min_on_sphere(SQ2, 3, 1e-4) == pytest.approx(0.0, abs=1e-15)


def test_farfield_coeff_examples():
    co = farfield_coeffs(1.3, 2.0, [0.0], 0.0, 2)
    assert co.betas == (0.0,)
    # Gamma(1)/pi at N = 2, c = 0 reduces alpha to p / pi
    assert co.alpha == pytest.approx(2.0 / math.pi, rel=1e-14)
    g3 = math.gamma(1.5) / math.pi**1.5
    co3 = farfield_coeffs(1.0, 0.5, [0.2, 0.0], 0.0, 3)
    assert co3.alpha == pytest.approx(0.5 * g3 * (0.5 * 1.0 * 0 + 2 * 0.5), rel=1e-14)
    assert co3.betas[0] == pytest.approx(g3 * 0.2, rel=1e-14)
    assert farfield_coeffs(0.0, 0.0, [0.0], 0.7, 2).alpha == 0.0


@given(st.floats(0, 2 * math.pi), st.floats(0, 1.4))
def test_farfield_profile_properties(t, c):
    co = FarFieldCoeffs(0.8, (0.3,))
    s = np.array([math.cos(t), math.sin(t)])
    assert farfield_profile(co, -s, c) == pytest.approx(-farfield_profile(co, s, c), abs=1e-14)
    if c == 0:
        assert farfield_profile(co, s, 0.0) == pytest.approx(0.8 * s[0] + 0.3 * s[1], abs=1e-14)
    assert farfield_profile(FarFieldCoeffs(0.8, (0.0,)), np.array([0.0, 1.0]), c) == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_farfield_profile_integrates_to_zero(dim):
    x, w = sphere_rule(dim)
    co = FarFieldCoeffs(1.0, (0.5,) * (dim - 1))
    assert abs(np.sum(w * farfield_profile(co, x, 1.1))) < 1e-12
    assert np.sum(w) == pytest.approx(2 * math.pi if dim == 2 else 4 * math.pi, rel=1e-12)


def test_fit_constant_field():
    g = Grid(2, 4, 32)
    fit = fit_farfield(constant_field(g, np.exp(0.3j)), (0.4, 0.8), 0.5)
    assert fit.measured.alpha == 0.0
    assert complex(fit.measured.lambda_inf) == pytest.approx(np.exp(0.3j), abs=1e-14)


def test_fit_recovers_synthetic_farfield():
    from gpwaves.kernels import farfield_templates

    g = Grid(2, 16, 128)
    c = 0.6
    T = farfield_templates(g, c)
    f = Field(g, np.exp(1j * (0.2 + 0.7 * T[0] - 0.1 * T[1])))
    fit = fit_farfield(f, (0.4, 0.8), c)
    assert fit.measured.alpha == pytest.approx(0.7, rel=1e-8)
    assert fit.measured.betas[0] == pytest.approx(-0.1, rel=1e-6)
    assert complex(fit.measured.lambda_inf) == pytest.approx(np.exp(0.2j), abs=1e-8)


def test_riesz_kernel_properties():
    rng = np.random.default_rng(1)
    for dim in (2, 3):
        x = rng.normal(size=(50, dim))
        tr = sum(riesz_kernel(j, j, x, dim) for j in range(1, dim + 1))
        assert np.max(np.abs(tr)) < 1e-12 * np.max(np.abs(riesz_kernel(1, 1, x, dim)))
        assert np.allclose(riesz_kernel(1, 2, 2 * x, dim), riesz_kernel(1, 2, x, dim) / 2**dim)
    e1 = np.array([1.3, 0.0, 0.0])
    assert riesz_kernel(1, 2, e1, 3) == 0.0
    with pytest.raises(SingularSymbolError):
        riesz_kernel(1, 1, [0.0, 0.0], 2)


def test_toy_decay_examples():
    x, K = algebraic_kernel(2.0, length=2.0**12, points=2**14)
    f0 = 1.0 / (1.0 + np.abs(x))
    res = toy_decay_iteration(K, 2.0, f0, x, window=(50.0, 400.0))
    assert res.status == "converged"
    assert res.exponent == pytest.approx(2.0, abs=0.15)
    assert toy_decay_iteration(K, 2.0, np.zeros_like(x), x).status == "zero"
    with pytest.raises(ValueError):
        toy_decay_iteration(K, 1.0, f0, x)

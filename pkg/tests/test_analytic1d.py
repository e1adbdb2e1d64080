import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import vanishing_field
from gpwaves.analytic1d import (
    KINK_ENERGY,
    SampledProfile1D,
    Wave1D,
    bridge_map,
    dispersion,
    dispersion_slope_check,
    eval_eta,
    eval_phase,
    eval_phase_derivative,
    eval_vc,
    fd_derivative,
    kdv_energy,
    kdv_energy_gap,
    kdv_rescale,
    limits,
    ode_residual,
    phase_jump,
    pointwise_momentum_bound_check,
    profile_energy,
    profile_renormalized_momentum,
    sample_wave,
    speed_from_momentum,
    trapezoid,
    zero_energy_sequence,
)

SQ2 = math.sqrt(2)
speeds = st.floats(0.0, 1.4)


def test_wave_rejects_sonic_and_negative():
    with pytest.raises(ValueError):
        Wave1D(SQ2)
    with pytest.raises(ValueError):
        Wave1D(-0.1)


@pytest.mark.parametrize("c,x,expected", [(0.0, 0.0, 0.0), (1.0, 0.0, -1j / SQ2)])
def test_vc_values(c, x, expected):
    assert abs(eval_vc(Wave1D(c), x) - expected) < 1e-15


def test_vc_limit_at_infinity():
    w = Wave1D(0.5)
    assert abs(eval_vc(w, 50.0) - (math.sqrt(1 - 0.125) - 0.5j / SQ2)) < 1e-12
    lo, hi = limits(w)
    assert abs(eval_vc(w, -50.0) - lo) < 1e-12 and abs(eval_vc(w, 50.0) - hi) < 1e-12


@given(speeds)
def test_eta_at_origin(c):
    assert eval_eta(Wave1D(c), 0.0) == pytest.approx((2 - c * c) / 2, abs=1e-15)


def test_eta_vanishes_at_sonic_limit():
    assert np.max(np.abs(eval_eta(Wave1D(SQ2 - 1e-9), np.linspace(-5, 5, 11)))) < 1e-8


@given(speeds, st.floats(-30, 30))
def test_eta_matches_modulus(c, x):
    w = Wave1D(c)
    assert 1 - abs(eval_vc(w, x)) ** 2 == pytest.approx(eval_eta(w, x), abs=1e-14)


def test_phase_derivative_examples():
    assert eval_phase_derivative(Wave1D(1.0), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert abs(eval_phase_derivative(Wave1D(0.5), 60.0)) < 1e-12


@pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 1.3])
def test_phase_jump_by_quadrature(c):
    w = Wave1D(c)
    L = 60 / w.eps
    x = np.linspace(-L, L, 200001)
    jump = trapezoid(eval_phase_derivative(w, x), x[1] - x[0])
    assert jump == pytest.approx(2 * math.atan(w.eps / c), rel=1e-9)
    assert phase_jump(w) == pytest.approx(2 * math.atan(w.eps / c), rel=1e-14)
    assert eval_phase(w, L) - eval_phase(w, -L) == pytest.approx(jump, rel=1e-9)


def test_dispersion_kink_and_sonic():
    d = dispersion(Wave1D(0.0))
    assert d.energy == pytest.approx(2 * SQ2 / 3, rel=1e-15) == KINK_ENERGY
    assert d.p_renorm == pytest.approx(math.pi / 2, rel=1e-15)
    s = dispersion(Wave1D(SQ2 - 1e-12))
    assert s.energy < 1e-15 and s.p_renorm < 1e-8


def test_dispersion_at_one():
    d = dispersion(Wave1D(1.0))
    assert d.energy == pytest.approx(1 / 3, rel=1e-15)
    assert d.p_renorm == pytest.approx(math.pi / 4 - 0.5, rel=1e-14)


def test_dispersion_matches_high_precision_oracle(oracle):
    for row in oracle["dispersion"]:
        d = dispersion(Wave1D(row["c"]))
        assert d.energy == pytest.approx(row["E"], rel=1e-13)
        assert d.p_renorm == pytest.approx(row["p_renorm"], rel=1e-13)


@pytest.mark.parametrize("c", [0.0, 0.25, 0.5, 0.75, 1.0, 1.25])
def test_sampled_profile_quadrature(c):
    w = Wave1D(c)
    prof = sample_wave(w, 0.01)
    d = dispersion(w)
    assert profile_energy(prof) == pytest.approx(d.energy, rel=1e-8)
    if c > 0:
        assert profile_renormalized_momentum(prof) == pytest.approx(d.p_renorm, rel=1e-8)


def test_renormalized_momentum_rejects_kink():
    with pytest.raises(ValueError):
        profile_renormalized_momentum(sample_wave(Wave1D(0.0), 0.01))


@pytest.mark.parametrize("c", [0.0, 0.25, 0.5, 0.75, 1.0, 1.25])
def test_ode_residual(c):
    prof = sample_wave(Wave1D(c), 0.005)
    assert np.max(np.abs(ode_residual(prof, c))) < 1e-6


@given(speeds, st.floats(-20, 20))
def test_first_integral(c, x):
    w = Wave1D(c)
    h = 1e-4
    dv = (eval_vc(w, x + h) - eval_vc(w, x - h)) / (2 * h)
    # second-order difference error is ~h^2 |v'''|
    assert abs(dv) ** 2 == pytest.approx(eval_eta(w, x) ** 2 / 2, abs=1e-8)


def test_first_integral_on_closed_form_derivative():
    # v' is real: d/dx sqrt(eps^2/2) tanh(eps x / 2) = eps^2 / (2 sqrt2) sech^2
    for c in (0.0, 0.3, 0.9, 1.3):
        w = Wave1D(c)
        x = np.linspace(-20, 20, 401)
        dv = w.eps**2 / (2 * SQ2) / np.cosh(w.eps * x / 2) ** 2
        assert np.max(np.abs(dv**2 - eval_eta(w, x) ** 2 / 2)) < 1e-10


def test_speed_from_momentum_round_trip_and_monotone():
    p = dispersion(Wave1D(0.7)).p_renorm
    assert speed_from_momentum(p) == pytest.approx(0.7, abs=1e-10)
    ps = np.linspace(1e-3, math.pi / 2 - 1e-3, 100)
    cs = [speed_from_momentum(v) for v in ps]
    assert np.all(np.diff(cs) < 0)
    assert speed_from_momentum(math.pi / 2 - 1e-9) < 1e-4
    assert speed_from_momentum(1e-9) > SQ2 - 1e-3
    with pytest.raises(ValueError):
        speed_from_momentum(2.0)


def test_slope_checks():
    dpdc, _ = dispersion_slope_check(1.0, 1e-5)
    assert dpdc == pytest.approx(-1.0, abs=1e-8)
    _, dEdp = dispersion_slope_check(0.3)
    assert dEdp == pytest.approx(0.3, abs=1e-6)
    c = SQ2 - 1e-3
    dpdc, _ = dispersion_slope_check(c, 1e-6)
    assert dpdc == pytest.approx(-math.sqrt(2 - c * c), rel=1e-3)


def test_bridge_examples():
    b = bridge_map(1 / 32, 0.25)
    assert b.measured_q == pytest.approx(1 / 32, rel=1e-6)
    assert b.measured_E <= 14 / 32
    n = bridge_map(-1 / 64, 0.25)
    assert n.measured_q == pytest.approx(-1 / 64, abs=1e-8)
    m = bridge_map(1 / 100, 0.1)
    assert m.delta == pytest.approx(min(0.01, 8 / 100))
    assert abs(m.profile.values[0]) == pytest.approx(math.sqrt(1 - m.delta), rel=1e-14)


@pytest.mark.parametrize("q", [0.0, 0.1])
def test_bridge_rejects_out_of_range(q):
    with pytest.raises(ValueError):
        bridge_map(q, 0.1)


def test_zero_energy_sequence():
    assert zero_energy_sequence(1.0, 100).energy == pytest.approx(0.01, abs=1e-8)
    assert zero_energy_sequence(math.pi / 4, 1).energy == pytest.approx(math.pi**2 / 16, rel=1e-12)
    es = [zero_energy_sequence(0.5, n).energy for n in (1, 10, 100)]
    assert es[0] > es[1] > es[2]
    # the phase drops by 2p, so the physical momentum equals p
    assert zero_energy_sequence(0.5, 10).physical_momentum == pytest.approx(0.5, rel=1e-12)


@given(st.floats(0.01, 1.41), st.floats(-10, 10))
def test_kdv_rescale_identity(c, x):
    assert kdv_rescale(Wave1D(c), x) == pytest.approx(0.5 / math.cosh(x / 2) ** 2, abs=1e-12)


def test_kdv_rescale_examples():
    assert kdv_rescale(Wave1D(0.7), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert kdv_rescale(Wave1D(0.3), 1.0) == pytest.approx(kdv_rescale(Wave1D(1.2), 1.0), abs=1e-14)
    x = np.linspace(-80, 80, 160001)
    assert trapezoid(kdv_rescale(Wave1D(1.0), x), x[1] - x[0]) == pytest.approx(2.0, rel=1e-10)


def test_kdv_energy_gap(oracle):
    assert kdv_energy() == pytest.approx(oracle["kdv"]["energy"], rel=1e-10)
    ratios = {}
    for e in (0.2, 0.1):
        gap, pred = kdv_energy_gap(Wave1D(math.sqrt(2 - e * e)))
        ratios[e] = gap / pred
        assert ratios[e] == pytest.approx(oracle["kdv"][f"ratio_eps_{e}"], rel=1e-6)
    assert abs(ratios[0.2] - 1) < 0.05
    assert abs(ratios[0.1] - 1) < abs(ratios[0.2] - 1)
    gap, pred = kdv_energy_gap(Wave1D(math.sqrt(2 - 1e-6)))
    assert abs(gap) < 1e-14 and abs(pred) < 1e-14


def test_pointwise_bound_examples():
    assert pointwise_momentum_bound_check(sample_wave(Wave1D(0.8), 0.01)) <= 1 + 1e-6
    const = SampledProfile1D(np.linspace(0, 1, 11), np.ones(11))
    assert pointwise_momentum_bound_check(const) == 0.0


def _random_smooth(seed, n=2001, L=20.0, vanish=False):
    rng = np.random.default_rng(seed)
    x = np.linspace(-L, L, n)
    modes = rng.integers(1, 6)
    v = np.ones(n, complex)
    for _ in range(modes):
        a = rng.normal(0, 0.3) + 1j * rng.normal(0, 0.3)
        x0, s = rng.uniform(-L / 2, L / 2), rng.uniform(0.5, 4)
        v = v + a * np.exp(-((x - x0) ** 2) / s**2)
    return x, v, rng


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_pointwise_bound_random_nonvanishing(seed):
    x, v, _ = _random_smooth(seed)
    if np.min(np.abs(v)) < 0.05:
        v = v / np.abs(v) * np.maximum(np.abs(v), 0.05)
        # keep it smooth enough for the eighth-order stencil
        v = np.convolve(v, np.ones(9) / 9, mode="same")
        v[:8], v[-8:] = 1, 1
    assert pointwise_momentum_bound_check(SampledProfile1D(x, v)) <= 1 + 1e-6


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_kink_minimality(seed):
    prof = vanishing_field(seed)
    assert np.min(np.abs(prof.values)) < 1e-12
    assert profile_energy(prof) >= KINK_ENERGY - 1e-4


def test_fd_derivative_exact_on_polynomial():
    x = np.linspace(0, 1, 101)
    assert np.allclose(fd_derivative(x**3, x[1] - x[0])[4:-4], 3 * x[4:-4] ** 2, atol=1e-12)

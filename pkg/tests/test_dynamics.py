import math

import numpy as np
import pytest

from gpwaves.dynamics import (
    PropagatorConfig,
    bogoliubov_frequency,
    evolve,
    obstacle_flow,
    orbital_distance,
    stability_experiment,
    step,
    time_derivative_norm,
)
from gpwaves.field import Field, Grid, constant_field, deriv, gaussian_potential, integrate, twisted_wave

SMALL = Grid(1, 32, 1024)


def test_config_validation():
    with pytest.raises(ValueError):
        PropagatorConfig(dt=-1.0)
    with pytest.raises(ValueError):
        PropagatorConfig(frame="sideways")


def test_constant_is_fixed_point():
    g = Grid(2, 2, 16)
    f = step(constant_field(g), PropagatorConfig(dt=0.01))
    assert np.max(np.abs(f.values - 1)) < 1e-15


def test_nonlinear_substep_preserves_modulus():
    g = Grid(1, 4, 64)
    rng = np.random.default_rng(0)
    u = 1 + 0.3 * (rng.normal(size=64) + 1j * rng.normal(size=64))
    from gpwaves.dynamics import _Stepper

    st = _Stepper(g, PropagatorConfig(dt=0.1), 0.1)
    assert np.array_equal(np.abs(st.nonlinear(u, 0.05)), np.abs(u)) or \
        np.max(np.abs(np.abs(st.nonlinear(u, 0.05)) - np.abs(u))) < 1e-15


@pytest.mark.parametrize("m", [1, 3])
def test_bogoliubov_frequency(m):
    g = Grid(1, 1, 64)
    x = g.axis(0)
    a = 1e-5
    f0 = Field(g, 1 + a * np.cos(m * x))
    xi = float(m)
    om = float(bogoliubov_frequency(xi))
    periods = 10
    dt = 1e-3
    T = periods * 2 * math.pi / om
    amps, times = [], []
    cb = lambda t, f: (times.append(t), amps.append(np.real(np.sum((f.values - 1) * np.cos(m * x)))))
    evolve(f0, PropagatorConfig(dt=dt, t_end=T, observer_stride=1), callback=cb)
    y = np.array(amps)
    t = np.array(times)
    # zero crossings of the real part, linearly interpolated
    i = np.nonzero(np.sign(y[:-1]) != np.sign(y[1:]))[0]
    tz = t[i] - y[i] * (t[i + 1] - t[i]) / (y[i + 1] - y[i])
    measured = math.pi / np.mean(np.diff(tz))
    assert measured == pytest.approx(om, rel=1e-3)


def test_soliton_translates():
    f0, info = twisted_wave(SMALL, 0.5)
    T = 4.0
    f, _ = evolve(f0, PropagatorConfig(dt=1e-3, t_end=T, observer_stride=4000))
    d, a, _ = orbital_distance(f, 0.5, 20.0, k=info.k, return_params=True)
    assert d < 1e-6
    assert a / T == pytest.approx(0.5 - 2 * info.k, abs=1e-3)


def test_reversibility():
    f0, _ = twisted_wave(SMALL, 0.5)
    cfg = PropagatorConfig(dt=1e-3, t_end=2.0, observer_stride=2000)
    f1, _ = evolve(f0, cfg)
    f2, _ = evolve(f1, cfg, direction=-1)
    assert np.max(np.abs(f2.values - f0.values)) < 1e-6


def test_conservation():
    f0, _ = twisted_wave(SMALL, 0.5)
    _, tr = evolve(f0, PropagatorConfig(dt=1e-3, t_end=20.0, observer_stride=1000))
    assert tr.drift("masses") <= 1e-8
    assert tr.drift("energies") <= 1e-6
    assert tr.drift("momenta") <= 1e-6


def test_center_of_mass_slope():
    g = SMALL
    f0, _ = twisted_wave(g, 0.5)
    _, tr = evolve(f0, PropagatorConfig(dt=1e-3, t_end=1.0, observer_stride=100))
    slope = np.polyfit(tr.times, tr.mass_centers, 1)[0]
    u = f0.values
    q = 0.5 * np.real(1j * deriv(g, u, 0) * np.conj(u))
    # on the torus the uniform current of the twist leaves through the cell edge
    P = integrate(g, q) - g.lengths[0] * q[0]
    assert slope == pytest.approx(2 * P, abs=1e-4)


def strang_errors(dts, T=1.0):
    g = Grid(1, 4, 128)
    x = g.axis(0)
    f0 = Field(g, 1 + 0.2 * np.exp(-x**2) * (1 + 0.5j))

    def run(dt):
        return evolve(f0, PropagatorConfig(dt=dt, t_end=T, observer_stride=10**9))[0].values

    ref = run(dts[-1] / 4)
    return [np.max(np.abs(run(dt) - ref)) for dt in dts]


def test_strang_second_order():
    e1, e2 = strang_errors([0.02, 0.01])
    # errors are measured against a dt/4 run; the factors remove its own error
    ratio = (e1 * 16 / 15) / (e2 * 4 / 3)
    assert ratio == pytest.approx(4.0, rel=0.2)


def test_orbital_distance_examples():
    g = Grid(1, 64, 2048)
    f, info = twisted_wave(g, 0.5)
    assert orbital_distance(f, 0.5, 20.0, k=info.k) < 1e-10
    moved, _ = twisted_wave(g, 0.5, shift=1.7, k=info.k)
    rot = moved.replace(np.exp(0.3j) * moved.values)
    assert orbital_distance(rot, 0.5, 20.0, k=info.k) < 1e-8
    x = g.axis(0)
    bump = f.replace(f.values + 0.01 * np.exp(-((x - 2) ** 2)))
    d = orbital_distance(bump, 0.5, 20.0, k=info.k)
    assert 0 < d < 0.1
    assert abs(orbital_distance(bump.replace(np.exp(-0.8j) * bump.values), 0.5, 20.0, k=info.k) - d) <= 1e-10


def test_stability_zero_perturbation():
    res = stability_experiment(0.5, 0.0, 2.0, 20.0, grid=SMALL, dt=1e-3)
    assert res.max_distance <= 1e-6


def test_obstacle_flow_trivial_potential():
    g = Grid(2, 4, 32)
    V = gaussian_potential(g, 0.0, 1.0)
    ob = obstacle_flow(V, 0.3, 1.0, dt=0.01)
    assert np.max(np.abs(ob.field.values - 1)) < 1e-14
    assert ob.events == []
    assert time_derivative_norm(ob.field, PropagatorConfig(frame="moving", c=0.3, potential=V)) < 1e-12


def test_resonance_warning(caplog):
    g = Grid(1, 1, 64)
    f0 = Field(g, 1 + 0.5 * np.cos(g.axis(0)))
    with caplog.at_level("WARNING", logger="gpwaves"):
        evolve(f0, PropagatorConfig(dt=0.01, t_end=0.02))
    assert "resonance" in caplog.text

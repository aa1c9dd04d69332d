import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ionmirror.dynamics import (
    N_COMP,
    build_kernel,
    evolve,
    excitation_probability,
    standard_initial_state,
    peak_time,
    relevant_amplitudes,
    trajectory_csv,
)
from ionmirror.expseries import ExpSeries, incomplete_moment, product_phase_integral
from ionmirror.geometry import MirrorGeometry, gamma_rel
from ionmirror.levels import ZeemanConfig, build_level_scheme


def kernel(delta=0.0, tau=3.0, gam=None, **kw):
    scheme = build_level_scheme(ZeemanConfig.from_delta(delta), **kw)
    return build_kernel(scheme, gamma_rel=np.eye(3) if gam is None else gam, tau=tau)


def p2_oracle(t, tau=3.0):
    """Ion-2 excitation from the two sigma channels, each of unit coupling.

    b(t) = int_tau^t exp(-1.5 (t - s)) exp(-1.5 (s - tau)) ds, done by quad.
    """
    if t <= tau:
        return 0.0
    amp = integrate.quad(lambda s: math.exp(-1.5 * (t - s)) * math.exp(-1.5 * (s - tau)), tau, t, epsabs=1e-14)[0]
    return 2 * amp**2


def test_ion1_decay_and_silence_before_tau():
    traj = evolve(kernel(), standard_initial_state(), 5.97)
    t, p1 = excitation_probability(traj, 1)
    assert np.max(np.abs(p1 - np.exp(-3 * t))) < 1e-10
    _, p2 = excitation_probability(traj, 2)
    assert np.max(np.abs(p2[t < 3.0])) < 1e-14


@pytest.mark.parametrize("t", [3.5, 3.0 + 2 / 3, 4.5, 5.9])
def test_ion2_against_quad_oracle(t):
    traj = evolve(kernel(), standard_initial_state(), 5.99, t_grid=np.array([0.0, t]))
    _, p2 = excitation_probability(traj, 2)
    assert p2[-1] == pytest.approx(p2_oracle(t), abs=1e-12)


def test_ion2_peak_position():
    traj = evolve(kernel(), standard_initial_state(), 5.97)
    t_peak, p_peak = peak_time(traj, 2)
    assert abs(t_peak / 3.0 - (1 + 2 / 9)) < 0.002
    assert p_peak == pytest.approx(p2_oracle(3.0 + 2 / 3), abs=1e-10)


def test_sigma_amplitudes_equal_magnitude_with_zeeman():
    traj = evolve(kernel(delta=1.3), standard_initial_state(), 5.9)
    amps = relevant_amplitudes(traj)
    assert np.allclose(np.abs(amps["ion2_P1p1_S1m1"]), np.abs(amps["ion2_P1m1_S1p1"]), atol=1e-14)
    assert "ion2_P00_S00" not in amps


def test_grid_method_agrees_with_analytic():
    k = kernel(delta=0.7, gam=gamma_rel(MirrorGeometry()))
    a = evolve(k, standard_initial_state(), 5.9, dt=0.003)
    g = evolve(k, standard_initial_state(), 5.9, dt=0.003, method="grid")
    assert np.max(np.abs(a.b - g.b)) < 1e-4


def test_second_order_reflection_returns_to_ion1():
    k = kernel()
    traj = evolve(k, standard_initial_state(), 8.9, order=2)
    t, p1 = excitation_probability(traj, 1)
    assert np.max(p1[t > 6.5] - np.exp(-3 * t[t > 6.5])) > 1e-6


def test_window_and_grid_validation():
    k = kernel()
    with pytest.raises(ValueError):
        evolve(k, standard_initial_state(), 6.0)
    with pytest.raises(ValueError):
        evolve(k, standard_initial_state(), 5.0, t_grid=np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ValueError):
        evolve(k, 2 * standard_initial_state(), 5.0)
    with pytest.raises(ValueError):
        evolve(k, standard_initial_state(), 5.0, method="euler")
    with pytest.raises(ValueError):
        build_kernel(build_level_scheme(), gamma_rel=np.eye(2), tau=1.0)
    with pytest.raises(ValueError):
        build_kernel(build_level_scheme(), gamma_rel=np.eye(3), tau=0.0)
    with pytest.raises(ValueError):
        build_kernel(build_level_scheme(), gamma_rel=np.triu(np.ones((3, 3))), tau=1.0)


def test_kernel_rates():
    k = kernel()
    assert np.allclose(np.diag(k.self_rate), 1.5)
    assert np.allclose(k.self_rate, np.diag(np.diag(k.self_rate)))
    assert k.rate_scale == 3.0


def test_geometry_delay_conversion():
    geom = MirrorGeometry()
    k = build_kernel(build_level_scheme(ZeemanConfig(gamma=1.2e8)), geom)
    assert k.tau == pytest.approx(geom.tau * 1.2e8)


def _random_state(rng):
    v = rng.normal(size=N_COMP) + 1j * rng.normal(size=N_COMP)
    return v / np.linalg.norm(v) * 0.7


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-2, 2), st.floats(-3, 3))
def test_evolve_linear_in_initial_state(seed, a_re, delta):
    rng = np.random.default_rng(seed)
    x, y = _random_state(rng), _random_state(rng)
    a = complex(a_re, 0.5)
    k = kernel(delta=delta, tau=2.0)
    grid = np.linspace(0, 3.9, 40)
    bx = evolve(k, x, 3.9, t_grid=grid).b
    by = evolve(k, y, 3.9, t_grid=grid).b
    s = (a * x + y) / (abs(a) + 1)
    bs = evolve(k, s, 3.9, t_grid=grid).b
    assert np.allclose(bs, (a * bx + by) / (abs(a) + 1), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False).filter(lambda z: z.real >= 0), st.floats(0.01, 5))
def test_incomplete_moment_against_quad(d, nu, length):
    re = integrate.quad(lambda v: (v**d * np.exp(-nu * v)).real, 0, length, epsabs=1e-13, limit=400)[0]
    im = integrate.quad(lambda v: (v**d * np.exp(-nu * v)).imag, 0, length, epsabs=1e-13, limit=400)[0]
    got = incomplete_moment(d, nu, length)
    assert abs(got - complex(re, im)) <= 1e-9 * max(1.0, abs(complex(re, im)))


def test_delayed_convolution_against_quad():
    rates = np.array([1.5 + 2j, 1.5 - 1j])
    x = ExpSeries.exponential(rates, np.array([1.0, 0.5j]))
    m = np.array([[0.3, 0.2j], [-0.1, 0.4]])
    y = x.delayed_convolution(rates, m, 1.0, 4.0)
    t = 3.2
    xs = lambda s: x.evaluate([s])[0]
    for c in range(2):
        f = lambda s: np.exp(-rates[c] * (t - s)) * -(m @ xs(s - 1.0))[c]
        re = integrate.quad(lambda s: f(s).real, 1.0, t, epsabs=1e-13)[0]
        im = integrate.quad(lambda s: f(s).imag, 1.0, t, epsabs=1e-13)[0]
        assert abs(y.evaluate([t])[0, c] - complex(re, im)) < 1e-11


def test_product_phase_integral_against_quad():
    rates = np.array([1.5 + 2j])
    x = ExpSeries.exponential(rates, np.array([1.0]))
    terms = x.component(0)
    omega, t = 0.7, 2.5
    f = lambda s: np.exp(-1j * omega * (t - s)) * abs(np.exp(-rates[0] * s)) ** 2
    re = integrate.quad(lambda s: f(s).real, 0, t)[0]
    im = integrate.quad(lambda s: f(s).imag, 0, t)[0]
    assert abs(product_phase_integral(terms, terms, omega, t) - complex(re, im)) < 1e-12


def test_trajectory_csv_header():
    traj = evolve(kernel(), standard_initial_state(), 5.0, t_grid=np.array([0.0, 5.0]))
    text = trajectory_csv(traj)
    assert text.splitlines()[0].startswith("t_over_tau,P1_probability,P2_probability")
    assert text.splitlines()[1].startswith("0,1,0")

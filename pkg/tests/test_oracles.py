import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from allee_lab import oracles
from allee_lab.discretization import Grid, laplacian_values
from allee_lab.model import QuadraticFitness


def test_gaussian_state_values():
    s = oracles.gaussian_ground_state(2.0, 0.5)
    assert s.lam == 1.5
    assert s.peak == pytest.approx(0.42314218766081724, rel=1e-12)
    assert s(0.0) == pytest.approx(s.peak)


def test_gaussian_mass_on_default_grid():
    g = Grid()
    s = oracles.gaussian_ground_state(2.0, 0.5)
    assert s.sample(g).mass() == pytest.approx(1.5, abs=1e-8)


def test_gaussian_rejects_large_alpha():
    with pytest.raises(oracles.NoSteadyStateError):
        oracles.gaussian_ground_state(2.0, 2.0)
    with pytest.raises(oracles.NoSteadyStateError):
        oracles.peak_height(2.0, 3.0)
    assert oracles.gaussian_ground_state(2.0, 2.0 - 1e-9).lam == pytest.approx(0.0, abs=1e-8)


def test_gaussian_is_discrete_fixed_point():
    # p'' + (r_max - alpha^2 theta^2) p - lam p = 0 up to stencil error
    res = []
    for n in (801, 1601, 3201):
        g = Grid(n=n)
        s = oracles.gaussian_ground_state(2.0, 0.5)
        p = s(g.theta)
        r = QuadraticFitness(2.0, 0.5)(g.theta)
        out = laplacian_values(p, g.h) + r * p - s.lam * p
        res.append(np.max(np.abs(out[1:-1])))
    assert res[0] < 5e-3 * s.peak
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.05)


def test_peak_height_and_optimum():
    assert oracles.optimal_alpha(2.0) == pytest.approx(2.0 / 3.0)
    best = oracles.peak_height(2.0, 2.0 / 3.0)
    assert best == pytest.approx(0.43431, abs=1e-5)
    for a in (0.1, 0.5, 1.0, 1.5):
        assert oracles.peak_height(2.0, a) < best


def test_logistic_fixed_point_and_limits():
    t = np.linspace(0, 10, 11)
    assert np.allclose(oracles.logistic_mass(2.0, 2.0, t), 2.0)
    up = oracles.logistic_mass(0.5, 2.0, np.linspace(0, 20, 200))
    down = oracles.logistic_mass(10.0, 2.0, np.linspace(0, 20, 200))
    assert np.all(np.diff(up) >= 0) and np.all(np.diff(down) <= 0)
    assert np.all(up <= 2.0) and np.all(down >= 2.0)
    assert up[-1] == pytest.approx(2.0, rel=1e-12) and down[-1] == pytest.approx(2.0, rel=1e-12)


@given(st.floats(0.05, 20.0), st.floats(0.1, 5.0), st.floats(0.01, 3.0))
def test_logistic_solves_its_ode(rho0, r, t):
    d = 1e-5
    lhs = (oracles.logistic_mass(rho0, r, t + d) - oracles.logistic_mass(rho0, r, t - d)) / (2 * d)
    rho = oracles.logistic_mass(rho0, r, t)
    scale = max(abs(r * rho), rho * rho)
    assert lhs == pytest.approx(r * rho - rho * rho, abs=1e-6 * scale)


def test_lower_mass_value():
    assert oracles.lower_mass(10.0, 2.0, 1.0) == pytest.approx(2.0 / (1.2 * math.e**2 - 1.0), rel=1e-14)
    assert oracles.lower_mass(10.0, 2.0, 1.0) == pytest.approx(0.2542308035679740, rel=1e-12)
    assert oracles.lower_mass(10.0, 2.0, 0.0) == pytest.approx(10.0)


def test_envelope_start_and_minimum():
    assert oracles.envelope_ubar(0.7, 2.0, 3.0, 10.0, 0.0) == pytest.approx(0.7)
    assert oracles.ubar_min(1.0, 1.0, 2.0, 10.0) == pytest.approx(0.25**1.5 * math.sqrt(10.0), rel=1e-12)
    assert oracles.ubar_min(1.0, 1.0, 2.0, 10.0) == pytest.approx(0.3953, abs=1e-4)
    t = np.linspace(0.0, 3.0, 300001)
    assert np.min(oracles.envelope_ubar(1.0, 1.0, 2.0, 10.0, t)) == pytest.approx(0.3953, abs=1e-4)


@settings(max_examples=50)
@given(st.floats(0.2, 3.0), st.floats(0.2, 20.0), st.floats(1.05, 50.0))
def test_tstar_is_the_minimum(r, K, ratio):
    rho0 = ratio * r
    ts = oracles.tstar(r, K, rho0)
    assert oracles.lower_mass(rho0, K, ts) == pytest.approx(r, rel=1e-10)
    assert oracles.ubar_min(1.3, r, K, rho0) == pytest.approx(
        float(oracles.envelope_ubar(1.3, r, K, rho0, ts)), rel=1e-10)


@settings(max_examples=50)
@given(st.floats(0.2, 3.0), st.floats(0.2, 20.0), st.floats(0.5, 50.0), st.floats(0.01, 3.0))
def test_ubar_obeys_its_ode(r, K, rho0, t):
    d = 1e-6 * max(1.0, t)
    f = lambda s: float(oracles.envelope_ubar(1.0, r, K, rho0, s))
    deriv = (f(t + d) - f(t - d)) / (2 * d)
    expect = (r - float(oracles.lower_mass(rho0, K, t))) * f(t)
    assert deriv == pytest.approx(expect, rel=1e-6, abs=1e-9 * f(t))


def test_ubar_min_decreases_with_mass():
    assert oracles.ubar_min(1.0, 2.0, 3.0, 1e4) < oracles.ubar_min(1.0, 2.0, 3.0, 1e2)


def test_no_interior_minimum():
    with pytest.raises(oracles.NoInteriorMinimumError):
        oracles.tstar(2.0, 3.0, 2.0)
    with pytest.raises(oracles.NoInteriorMinimumError):
        oracles.ubar_min(1.0, 2.0, 3.0, 1.0)

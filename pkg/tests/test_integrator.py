import numpy as np
import pytest

from allee_lab import oracles
from allee_lab.discretization import Field, Grid
from allee_lab.integrator import (EarlyStop, SimConfig, SplitStepper, StiffnessError, advance,
                                  read_trajectory, simulate, step_semi_implicit, write_trajectory)
from allee_lab.model import ConstantFitness, ModelSpec, NoAllee, PolynomialBump, Rectangle

G = Grid()
CONSTANT = ModelSpec(ConstantFitness(2.0), PolynomialBump(15.0, 0.1))


def gaussian(width=1.0):
    return Field(G, 0.0, np.exp(-G.theta**2 / (2 * width**2)))


def test_zero_field_stays_zero():
    z = Field(G, 0.0, np.zeros(G.n))
    assert np.all(step_semi_implicit(z, CONSTANT, 0.01).values == 0.0)
    traj = advance(z, CONSTANT, SimConfig(t_end=0.5))
    assert all(np.all(s.values == 0) for s in traj.samples)
    assert np.all(traj.masses == 0)


def test_diffusion_substep_conserves_mass():
    st = SplitStepper(ModelSpec(ConstantFitness(0.0), NoAllee()), G)
    u = gaussian().values
    out = st.diffusion(u, 0.05)
    assert abs(G.weights @ out - G.weights @ u) < 1e-12


def test_competition_only_step_matches_mass_ode():
    # r = 0, f = 0: rho' = -rho^2 up to boundary flux
    m = ModelSpec(ConstantFitness(0.0), NoAllee())
    u0 = gaussian()
    rho0 = u0.mass()
    traj = advance(u0, m, SimConfig(t_end=1.0, sample_every=0.5))
    assert traj.masses[-1] == pytest.approx(rho0 / (1 + rho0), rel=1e-5)


def test_step_order():
    u = Field(G, 0.0, 0.3 * np.exp(-G.theta**2 / 8))
    st = SplitStepper(CONSTANT, G)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        one = st.step(np.array(u.values), dt)
        two = st.step(st.step(np.array(u.values), dt / 2), dt / 2)
        errs.append(np.max(np.abs(one - two)))
    # local error ~ dt^(p+1); p >= 1 means ratio >= 4
    assert errs[0] / errs[1] > 4 and errs[1] / errs[2] > 4


def test_logistic_mass_law():
    m = ModelSpec(ConstantFitness(2.0), NoAllee())
    for rho0 in (0.5, 2.0, 10.0):
        traj = simulate(m.with_initial(Rectangle(rho0 / 4.0, 4.0)), SimConfig())
        exact = oracles.logistic_mass(rho0, 2.0, traj.times)
        assert np.max(np.abs(traj.masses / exact - 1)) < 1e-3


def test_small_data_extinct():
    traj = simulate(CONSTANT.with_initial(Rectangle(0.05, 2.0)), SimConfig())
    assert traj.final.peak < CONSTANT.eps_eff
    assert traj.final.t == 5.0


def test_sample_times_exact():
    traj = simulate(CONSTANT.with_initial(Rectangle(1.0, 2.0)), SimConfig(t_end=1.0, sample_every=0.25))
    assert traj.times.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert traj.step_stats["accepted"] > 0
    assert traj.step_stats["max_undershoot"] <= 10 * 1e-9
    assert all(s.values.min() >= 0 for s in traj.samples)


def test_record_false_keeps_ends():
    cfg = SimConfig(t_end=1.0, sample_every=0.25)
    full = simulate(CONSTANT.with_initial(Rectangle(1.0, 2.0)), cfg)
    brief = simulate(CONSTANT.with_initial(Rectangle(1.0, 2.0)), cfg, record=False)
    assert len(brief.samples) == 2
    assert np.array_equal(brief.final.values, full.final.values)


def test_early_stop():
    cfg = SimConfig(early_stop=EarlyStop(extinct_below=CONSTANT.eps_eff))
    traj = simulate(CONSTANT.with_initial(Rectangle(0.05, 2.0)), cfg, record=False)
    assert traj.stop_reason == "early_stop:extinct"
    assert traj.final.t < 5.0 and traj.final.peak < CONSTANT.eps_eff


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(t_end=0.0)
    with pytest.raises(ValueError):
        SimConfig(rtol=0.5)
    with pytest.raises(ValueError):
        SimConfig(dt_init=1.0, dt_max=0.05)


def test_stiffness_error(monkeypatch):
    # a step whose halves never agree forces dt below the floor
    monkeypatch.setattr(SplitStepper, "step", lambda self, u, dt: u + np.sqrt(dt))
    with pytest.raises(StiffnessError):
        advance(Field(G, 0.0, np.zeros(G.n)), CONSTANT, SimConfig(t_end=1.0))


def test_trajectory_round_trip(tmp_path):
    traj = simulate(CONSTANT.with_initial(Rectangle(1.0, 2.0)), SimConfig(t_end=0.3))
    paths = write_trajectory(tmp_path, traj)
    assert len(paths) == 1 + len(traj.samples)
    back = read_trajectory(tmp_path)
    assert back.times.tolist() == traj.times.tolist()
    for a, b in zip(back.samples, traj.samples):
        assert np.array_equal(a.values, b.values)
    header = (tmp_path / "mass_trace.csv").read_text().splitlines()[0]
    assert header == "t,rho,max_u"

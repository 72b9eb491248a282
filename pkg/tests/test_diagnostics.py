import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from allee_lab import diagnostics as D
from allee_lab.discretization import Field, Grid
from allee_lab.integrator import SimConfig, Trajectory, advance, simulate
from allee_lab.model import (ConstantFitness, GaussianDipFitness, ModelSpec, NoAllee, PolynomialBump,
                             Rectangle)

G = Grid()
CONSTANT = ModelSpec(ConstantFitness(2.0), PolynomialBump(15.0, 0.1))
BOUNDED = ModelSpec(GaussianDipFitness(2.0, 2.0, 0.08), PolynomialBump(15.0, 0.1))


def field_with_peak(p):
    v = np.zeros(G.n)
    v[400] = p
    return Field(G, 5.0, v)


def test_classify_examples():
    assert D.classify(Field(G, 5.0, np.zeros(G.n)), 0.1).label == D.EXTINCT
    assert D.classify(field_with_peak(0.31), 0.1).label == D.PERSISTENT
    assert D.classify(field_with_peak(0.15), 0.1).label == D.UNDETERMINED
    out = D.classify(field_with_peak(0.31), 0.1)
    assert out.center == 0.31 and out.peak == 0.31
    with pytest.raises(ValueError):
        D.classify(field_with_peak(0.1), 0.0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.4))
def test_classify_monotone(a, b, eps):
    lo, hi = sorted((a, b))
    if D.label_for_peak(hi, eps) == D.EXTINCT:
        assert D.label_for_peak(lo, eps) == D.EXTINCT


def test_mass_balance_zero_trajectory():
    z = advance(Field(G, 0.0, np.zeros(G.n)), CONSTANT, SimConfig(t_end=1.0))
    assert D.mass_balance_residual(z, CONSTANT)["max"] == 0.0


def test_mass_balance_logistic():
    m = ModelSpec(ConstantFitness(2.0), NoAllee(), Rectangle(0.25, 4.0))
    traj = simulate(m, SimConfig())
    assert D.mass_balance_residual(traj, m)["max"] < 5e-3


def test_mass_balance_needs_three_samples():
    traj = simulate(CONSTANT.with_initial(Rectangle(1.0, 2.0)), SimConfig(t_end=0.2), record=False)
    with pytest.raises(ValueError):
        D.mass_balance_residual(traj, CONSTANT)


def test_envelope_zero_trajectory():
    z = advance(Field(G, 0.0, np.zeros(G.n)), BOUNDED, SimConfig(t_end=1.0))
    assert D.envelope_check(z, BOUNDED)["ok"]


def test_envelope_fig3b_large_data():
    m = BOUNDED.with_initial(Rectangle(2.0, 20.0))
    traj = simulate(m, SimConfig())
    rep = D.envelope_check(traj, m)
    assert rep["ok"], rep
    assert rep["ubar"]["checked"]
    assert 0 < rep["ubar"]["tstar"] < 5.0
    assert rep["ubar"]["K"] == pytest.approx(17.0, rel=1e-3)


def test_envelope_detects_violation():
    m = CONSTANT.with_initial(Rectangle(1.0, 2.0))
    traj = simulate(m, SimConfig(t_end=1.0))
    # inflate a late sample far above every bound
    bad = list(traj.samples)
    bad[-1] = Field(G, bad[-1].t, bad[-1].values * 1e6)
    rep = D.envelope_check(Trajectory(bad, traj.mass_trace, {}), m)
    assert not rep["ok"]
    assert rep["heat_kernel"]["first_violation"][0] == pytest.approx(1.0)


def test_extinction_sufficient_examples():
    assert not D.extinction_sufficient(1e-4, 1.5, 2.0, 3.0, 0.1)
    assert D.extinction_sufficient(1e-4, 100.0, 2.0, 3.0, 0.1)
    assert not D.extinction_sufficient(10.0, 100.0, 2.0, 3.0, 0.1)
    g6 = D.g_factor(1e6, 2.0, 3.0) / 1e6
    g7 = D.g_factor(1e7, 2.0, 3.0) / 1e7
    assert abs(g6 / g7 - 1) < 0.05
    with pytest.raises(ValueError):
        D.extinction_sufficient(0.0, 100.0, 2.0, 3.0, 0.1)


def test_extinction_sufficient_implies_extinct():
    # wide rectangle starting above eps_eff: the sup/mass condition holds and the run dies
    m = BOUNDED
    H, L = 0.15, 70.0
    assert H > m.eps_eff
    assert D.extinction_sufficient(H, H * L, m.r_max, m.K, m.eps_eff)
    traj = simulate(m.with_initial(Rectangle(H, L)), SimConfig(), record=False)
    assert D.classify(traj.final, m.eps_eff).label == D.EXTINCT


@pytest.mark.parametrize("row,label", [
    ("EEEE", "E"), ("EEPPEE", "EPE"), ("EPPP", "EP"), ("EEUEE", "E*"),
    ("EUPPUE", "EPE"), ("PPE", "PE"), ("PPP", "P"), ("EPEP", "EPEP"),
])
def test_detect_scenario(row, label):
    assert D.detect_scenario(list(row)) == label


def test_detect_scenario_errors():
    with pytest.raises(ValueError):
        D.detect_scenario(["E", "P"])
    with pytest.raises(ValueError):
        D.detect_scenario(["U", "U", "U"])


def test_detect_scenario_tie_stays_undetermined():
    # U exactly between E and P: excluded rather than guessed
    assert D.detect_scenario(list("EEUPP")) == "EP"
    assert D._collapse([D.EXTINCT, D.UNDETERMINED, D.PERSISTENT])[1] == D.UNDETERMINED


def test_invariants_on_persistent_run():
    m = CONSTANT.with_initial(Rectangle(1.0, 5.0))
    traj = simulate(m, SimConfig())
    res = D.check_invariants(traj, m)
    assert res["ok"], res
    assert res["smoothing_bound"]["violations"] == 0


def test_invariants_flag_negative_values():
    m = CONSTANT.with_initial(Rectangle(1.0, 2.0))
    traj = simulate(m, SimConfig(t_end=0.3))
    v = np.array(traj.samples[1].values)
    v[10] = -1e-3
    samples = list(traj.samples)
    samples[1] = Field(G, samples[1].t, v)
    res = D.check_invariants(Trajectory(samples, traj.mass_trace, {}), m)
    assert not res["nonnegative"]["ok"] and not res["ok"]


def test_report_json_serializes():
    out = D.classify(field_with_peak(0.3), 0.1)
    text = json.dumps(D.report_json(out, {"max": 0.0}, {"ok": True}))
    assert set(json.loads(text)) >= {"label", "peak", "center", "mass_final", "residuals", "envelope_margins"}

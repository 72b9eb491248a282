import json

import numpy as np
import pytest

from allee_lab import sweep as SW
from allee_lab.discretization import BlowupError
from allee_lab.integrator import SimConfig
from allee_lab.model import ConstantFitness, ModelSpec, PolynomialBump

CONSTANT = ModelSpec(ConstantFitness(2.0), PolynomialBump(15.0, 0.1))
SHORT = SimConfig(t_end=1.0)


def small_spec(workers=1):
    return SW.SweepSpec(CONSTANT, [0.05, 0.5, 1.0], [0.2, 2.0, 6.0], SHORT, workers=workers)


def test_spec_validation():
    with pytest.raises(ValueError):
        SW.SweepSpec(CONSTANT, [0.5, 0.1], [1.0], SHORT)
    with pytest.raises(ValueError):
        SW.SweepSpec(CONSTANT, [0.5], [-1.0, 1.0], SHORT)
    with pytest.raises(ValueError):
        SW.SweepSpec(CONSTANT, [0.5], [72.0], SHORT)
    H, L = SW.default_axes()
    assert len(H) == len(L) == 30 and H[0] == 0.02 and L[-1] == 30.0


def test_sweep_deterministic_across_workers(tmp_path):
    a = SW.run_sweep(small_spec(1))
    b = SW.run_sweep(small_spec(2))
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.to_json() == b.to_json()


def test_single_cell_reproduces_sweep():
    spec = small_spec()
    diag = SW.run_sweep(spec)
    cell = SW.run_cell(CONSTANT, 0.5, 2.0, spec.cell_config(), CONSTANT.eps_eff)
    assert cell == diag.cells[1][1]


def test_exports(tmp_path):
    diag = SW.run_sweep(small_spec())
    diag.write_json(tmp_path / "d.json")
    data = json.loads((tmp_path / "d.json").read_text())
    assert set(data) >= {"h_axis", "l_axis", "labels", "center_values", "peaks", "scenarios"}
    assert np.array(data["labels"]).shape == (3, 3)
    diag.write_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "H,L,label,u_T0,peak,mass_final" and len(lines) == 10
    assert diag.row_string(0) == "EEE" and diag.scenarios[0] == "E"


def test_center_equals_peak_for_radial_data():
    diag = SW.run_sweep(SW.SweepSpec(CONSTANT, [1.0], [1.0, 3.0, 8.0], SHORT, early_stop=False))
    assert np.allclose(diag.center_values, diag.peaks, atol=1e-8)


def test_failure_recorded_in_cell(monkeypatch):
    calls = {"n": 0}
    real = SW.simulate

    def flaky(model, cfg, record=True):
        calls["n"] += 1
        if calls["n"] == 2:
            raise BlowupError(0.5, 3)
        return real(model, cfg, record=record)

    monkeypatch.setattr(SW, "simulate", flaky)
    diag = SW.run_sweep(small_spec())
    statuses = [c.status for row in diag.cells for c in row]
    assert sum(s.startswith("error") for s in statuses) == 1
    assert diag.cells[0][1].label == SW.ERROR


def test_threshold_bisect_contract(monkeypatch):
    seen = []
    real = SW.run_cell

    def counting(model, H, L, cfg, eps):
        seen.append(L)
        return real(model, H, L, cfg, eps)

    monkeypatch.setattr(SW, "run_cell", counting)
    est = SW.threshold_bisect(CONSTANT, 1.0, 0.2, 2.0, 1.0, SHORT)
    assert len(seen) == 3  # two endpoints plus one midpoint
    assert 0.2 <= est <= 2.0


def test_threshold_bisect_needs_bracket():
    with pytest.raises(ValueError):
        SW.threshold_bisect(CONSTANT, 0.05, 0.2, 2.0, 0.1, SHORT)

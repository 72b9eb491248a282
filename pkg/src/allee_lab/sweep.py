"""Phase diagrams over rectangle data ``H 1_(-L/2, L/2)``."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .diagnostics import EXTINCT, PERSISTENT, UNDETERMINED, classify, detect_scenario
from .discretization import BlowupError
from .integrator import EarlyStop, SimConfig, StiffnessError, simulate
from .model import ModelSpec, Rectangle

ERROR = "error"


def default_axes(n_h: int = 30, n_l: int = 30):
    return list(np.linspace(0.02, 2.0, n_h)), list(np.linspace(0.2, 30.0, n_l))


@dataclass(frozen=True)
class SweepSpec:
    model: ModelSpec
    H_values: tuple
    L_values: tuple
    sim: SimConfig = field(default_factory=SimConfig)
    workers: int = 1
    early_stop: bool = True

    def __post_init__(self):
        object.__setattr__(self, "H_values", tuple(float(h) for h in self.H_values))
        object.__setattr__(self, "L_values", tuple(float(x) for x in self.L_values))
        for name, axis in (("H", self.H_values), ("L", self.L_values)):
            a = np.asarray(axis)
            if a.size == 0 or np.any(a <= 0) or np.any(np.diff(a) <= 0):
                raise ValueError(f"{name} values must be positive and strictly increasing")
        g = self.sim.grid
        if not max(self.L_values) / 2 + 5 < min(g.theta_max, -g.theta_min):
            raise ValueError("grid too narrow for the widest initial datum")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def cell_config(self) -> SimConfig:
        if not self.early_stop:
            return self.sim
        return replace(self.sim, early_stop=EarlyStop(extinct_below=self.model.eps_eff))


@dataclass(frozen=True)
class Cell:
    H: float
    L: float
    status: str
    label: str
    peak: float
    center: float
    mass_final: float
    t_final: float

    def as_dict(self) -> dict:
        return asdict(self)


def run_cell(model: ModelSpec, H: float, L: float, cfg: SimConfig, eps: float) -> Cell:
    """Simulate one rectangle datum and classify it; failures stay in-cell."""
    try:
        traj = simulate(model.with_initial(Rectangle(H, L)), cfg, record=False)
    except (BlowupError, StiffnessError, FloatingPointError) as exc:
        nan = float("nan")
        return Cell(H, L, f"{ERROR}: {exc}", ERROR, nan, nan, nan, nan)
    out = classify(traj.final, eps)
    return Cell(H, L, "ok", out.label, out.peak, out.center, out.mass_final, float(traj.final.t))


def _run_chunk(args):
    model, cfg, eps, cells = args
    return [(i, k, run_cell(model, H, L, cfg, eps)) for i, k, H, L in cells]


@dataclass
class PhaseDiagram:
    h_axis: list
    l_axis: list
    cells: list  # rows over H, columns over L
    scenarios: list

    @property
    def labels(self) -> list:
        return [[c.label for c in row] for row in self.cells]

    @property
    def center_values(self) -> np.ndarray:
        return np.array([[c.center for c in row] for row in self.cells])

    @property
    def peaks(self) -> np.ndarray:
        return np.array([[c.peak for c in row] for row in self.cells])

    def row_string(self, i: int) -> str:
        short = {EXTINCT: "E", PERSISTENT: "P", UNDETERMINED: "U", ERROR: "X"}
        return "".join(short[c.label] for c in self.cells[i])

    def to_json(self) -> dict:
        def clean(a):
            return [[None if not np.isfinite(v) else float(v) for v in row] for row in a]

        return {
            "h_axis": self.h_axis,
            "l_axis": self.l_axis,
            "labels": self.labels,
            "center_values": clean(self.center_values),
            "peaks": clean(self.peaks),
            "scenarios": self.scenarios,
            "status": [[c.status for c in row] for row in self.cells],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("H,L,label,u_T0,peak,mass_final\n")
            for row in self.cells:
                for c in row:
                    fh.write(f"{c.H!r},{c.L!r},{c.label},{c.center!r},{c.peak!r},{c.mass_final!r}\n")


def _row_scenario(row) -> Optional[str]:
    labels = [c.label for c in row if c.label != ERROR]
    try:
        return detect_scenario(labels)
    except ValueError:
        return None


def run_sweep(spec: SweepSpec) -> PhaseDiagram:
    """Every (H, L) cell independently; output does not depend on ``workers``."""
    eps = spec.model.eps_eff
    cfg = spec.cell_config()
    jobs = [(i, k, H, L) for i, H in enumerate(spec.H_values) for k, L in enumerate(spec.L_values)]
    n_workers = min(spec.workers, len(jobs))
    # static round-robin partition keeps chunk costs similar across the plane
    chunks = [(spec.model, cfg, eps, jobs[w::n_workers]) for w in range(n_workers)]
    if n_workers == 1:
        results = [_run_chunk(chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_chunk, chunks))

    grid = [[None] * len(spec.L_values) for _ in spec.H_values]
    for chunk in results:
        for i, k, cell in chunk:
            grid[i][k] = cell
    scenarios = [_row_scenario(row) for row in grid]
    return PhaseDiagram(list(spec.H_values), list(spec.L_values), grid, scenarios)


def threshold_bisect(model: ModelSpec, H: float, L_lo: float, L_hi: float, tol: float,
                     sim: Optional[SimConfig] = None) -> float:
    """Bisect on ``L`` between differently classified widths.

    Undetermined midpoints count as Extinct, so the bracket moves toward the
    Persistent side.  Returns the midpoint of the final bracket.
    """
    if not L_lo < L_hi or not tol > 0:
        raise ValueError("need L_lo < L_hi and tol > 0")
    sim = sim or SimConfig()
    eps = model.eps_eff
    cfg = replace(sim, early_stop=EarlyStop(extinct_below=eps))

    def label(L):
        cell = run_cell(model, H, L, cfg, eps)
        if cell.label == ERROR:
            raise RuntimeError(f"integration failed at L={L:g}: {cell.status}")
        return cell.label

    lo_lab, hi_lab = label(L_lo), label(L_hi)
    if UNDETERMINED in (lo_lab, hi_lab):
        raise ValueError("bracket endpoints must both be decided")
    if lo_lab == hi_lab:
        raise ValueError(f"no bracket: both endpoints {lo_lab}")
    lo, hi = L_lo, L_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lab = label(mid)
        if lab == UNDETERMINED:
            lab = EXTINCT
        if lab == lo_lab:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

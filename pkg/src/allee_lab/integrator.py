"""Adaptive time stepping of the semi-discrete system.

One step is a Strang splitting ``R(dt/2) D(dt) R(dt/2)``:

* ``R`` integrates the nodewise reaction ``u' = u (r - rho - f(u)/u)`` with a
  Heun step on ``log u``; it keeps ``u >= 0`` exactly and is stable for any
  strongly negative growth rate (far-field quadratic fitness, huge ``rho``);
* ``D`` integrates ``u' = Lap_h u`` with the two-stage L-stable SDIRK2
  scheme, i.e. two tridiagonal solves with the matrix ``I - gamma dt Lap_h``.

Both halves are second order, so the step is second order.  Step size is
controlled by step doubling.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg.lapack import dpttrf, dpttrs

from .discretization import BlowupError, Field, Grid, total_mass
from .model import ModelSpec

GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
ORDER = 2
DT_FLOOR = 1e-12


class StiffnessError(RuntimeError):
    """The step size controller pushed dt below the floor."""


@dataclass(frozen=True)
class EarlyStop:
    extinct_below: Optional[float] = None
    persist_above: Optional[float] = None


@dataclass(frozen=True)
class SimConfig:
    grid: Grid = field(default_factory=Grid)
    t_end: float = 5.0
    rtol: float = 1e-6
    atol: float = 1e-9
    dt_init: float = 1e-4
    dt_max: float = 0.05
    sample_every: float = 0.1
    early_stop: Optional[EarlyStop] = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.rtol <= 1e-2:
            raise ValueError("rtol must lie in (0, 1e-2]")
        if not self.atol > 0:
            raise ValueError("atol must be positive")
        if not 0 < self.dt_init <= self.dt_max <= self.t_end:
            raise ValueError("need 0 < dt_init <= dt_max <= t_end")
        if not self.sample_every > 0:
            raise ValueError("sample_every must be positive")


@dataclass
class Trajectory:
    samples: list
    mass_trace: list
    step_stats: dict
    stop_reason: str = "t_end"

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.mass_trace])

    @property
    def peaks(self) -> np.ndarray:
        return np.array([s.peak for s in self.samples])

    @property
    def final(self) -> Field:
        return self.samples[-1]

    @property
    def grid(self) -> Grid:
        return self.samples[0].grid


class SplitStepper:
    """Precomputed nodal data for repeated splitting steps on one grid."""

    def __init__(self, model: ModelSpec, grid: Grid):
        self.model = model
        self.grid = grid
        self.r = model.fitness(grid.theta)
        self.w = np.asarray(grid.weights)
        self.h2 = grid.h**2
        self.allee_rate = model.allee.rate
        self._factors = {}

    def reaction(self, u: np.ndarray, tau: float) -> np.ndarray:
        with np.errstate(under="ignore", over="raise"):
            a0 = self.r - self.w @ u - self.allee_rate(np.maximum(u, 0.0))
            u1 = u * np.exp(tau * a0)
            a1 = self.r - self.w @ u1 - self.allee_rate(np.maximum(u1, 0.0))
            return u * np.exp(0.5 * tau * (a0 + a1))

    def _factor(self, dt: float):
        # LDL^T of the SPD matrix I - gamma dt Lap_h; a step and its two
        # half steps only ever need two distinct dt values
        fac = self._factors.get(dt)
        if fac is None:
            c = GAMMA * dt / self.h2
            n = self.grid.n
            d, e, info = dpttrf(np.full(n, 1.0 + 2.0 * c), np.full(n - 1, -c))
            assert info == 0, "tridiagonal factorisation broke down"
            if len(self._factors) >= 4:
                self._factors.clear()
            fac = self._factors[dt] = (d, e)
        return fac

    def diffusion(self, u: np.ndarray, dt: float) -> np.ndarray:
        d, e = self._factor(dt)
        y1 = dpttrs(d, e, u)[0]
        # second stage rhs: u + (1 - g) dt Lap y1, with dt Lap y1 = (y1 - u) / g
        rhs2 = u + (1.0 - GAMMA) / GAMMA * (y1 - u)
        return dpttrs(d, e, rhs2)[0]

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        u = self.reaction(u, 0.5 * dt)
        u = self.diffusion(u, dt)
        return self.reaction(u, 0.5 * dt)


def step_semi_implicit(field: Field, model: ModelSpec, dt: float) -> Field:
    """One splitting step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = SplitStepper(model, field.grid).step(np.array(field.values), dt)
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise BlowupError(field.t + dt, int(bad[0]), "step")
    return Field(field.grid, field.t + dt, out)


def advance(field: Field, model: ModelSpec, cfg: SimConfig, record: bool = True) -> Trajectory:
    """Integrate from ``field`` to ``cfg.t_end`` and sample every ``cfg.sample_every``.

    With ``record=False`` only the initial and final fields are kept.
    """
    if field.grid != cfg.grid:
        raise ValueError("initial field is not sampled on cfg.grid")
    stepper = SplitStepper(model, cfg.grid)
    t0 = float(field.t)
    t_end = float(cfg.t_end)
    if t0 >= t_end:
        raise ValueError("initial time must precede cfg.t_end")
    u = np.array(field.values)
    samples = [field]
    trace = [(t0, total_mass(field))]
    stats = {"accepted": 0, "rejected": 0, "min_dt": math.inf, "max_undershoot": 0.0}

    k_next = 1
    ttol = 1e-12 * max(1.0, t_end)
    t = t0
    dt = cfg.dt_init
    reason = "t_end"
    stop = cfg.early_stop
    undershoot_cap = 10.0 * cfg.atol

    while t < t_end - ttol:
        t_target = min(t0 + k_next * cfg.sample_every, t_end)
        dt_try = min(dt, cfg.dt_max, t_target - t)
        hits = dt_try >= t_target - t - ttol
        try:
            big = stepper.step(u, dt_try)
            mid = stepper.step(u, 0.5 * dt_try)
            small = stepper.step(mid, 0.5 * dt_try)
        except FloatingPointError:
            big = small = np.full_like(u, np.nan)
        finite = np.isfinite(small)
        if not finite.all():
            if dt_try <= DT_FLOOR * 1e3:
                raise BlowupError(t + dt_try, int(np.flatnonzero(~finite)[0]), "advance")
            stats["rejected"] += 1
            dt = 0.2 * dt_try
            continue

        err = float(np.max(np.abs(big - small)))
        tol = cfg.rtol * float(np.max(np.abs(small))) + cfg.atol
        undershoot = max(0.0, -float(small.min()))
        accepted = err <= tol and undershoot <= undershoot_cap

        if accepted:
            stats["accepted"] += 1
            stats["min_dt"] = min(stats["min_dt"], dt_try)
            stats["max_undershoot"] = max(stats["max_undershoot"], undershoot)
            u = np.maximum(small, 0.0)
            t = t_target if hits else t + dt_try
            decided = None
            if stop is not None:
                peak = float(u.max())
                if stop.extinct_below is not None and peak < stop.extinct_below:
                    decided = "extinct"
                elif stop.persist_above is not None and peak > stop.persist_above:
                    decided = "persistent"
            if hits or decided:
                f = Field(cfg.grid, t, u)
                if record or decided or t >= t_end - ttol:
                    samples.append(f)
                    trace.append((t, total_mass(f)))
                if hits:
                    k_next += 1
            if decided:
                reason = f"early_stop:{decided}"
                break
        else:
            stats["rejected"] += 1

        fac = 5.0 if err == 0.0 else 0.9 * (tol / err) ** (1.0 / (ORDER + 1))
        fac = min(5.0, max(0.2, fac))
        if undershoot > undershoot_cap:
            fac = min(fac, 0.5)
        dt = dt_try * fac
        if not accepted and dt < DT_FLOOR:
            raise StiffnessError(f"step size underflow at t={t:g} (dt={dt:g})")

    if not record and samples[-1].t != t:
        f = Field(cfg.grid, t, u)
        samples.append(f)
        trace.append((t, total_mass(f)))
    return Trajectory(samples, trace, stats, reason)


def simulate(model: ModelSpec, cfg: SimConfig, record: bool = True) -> Trajectory:
    """Sample ``model.initial`` on ``cfg.grid`` and advance it."""
    if model.initial is None:
        raise ValueError("model has no initial datum")
    return advance(cfg.grid.sample(model.initial), model, cfg, record=record)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

MASS_TRACE = "mass_trace.csv"


def write_mass_trace_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,rho,max_u\n")
        for (t, rho), s in zip(traj.mass_trace, traj.samples):
            fh.write(f"{float(t)!r},{float(rho)!r},{float(s.peak)!r}\n")


def snapshot_name(k: int) -> str:
    return f"snapshot_{k:05d}.csv"


def write_trajectory(directory, traj: Trajectory) -> list:
    """Mass trace plus one ``theta,u`` CSV per sample; returns written paths."""
    from .discretization import write_field_csv

    os.makedirs(directory, exist_ok=True)
    paths = [os.path.join(directory, MASS_TRACE)]
    write_mass_trace_csv(paths[0], traj)
    for k, s in enumerate(traj.samples):
        p = os.path.join(directory, snapshot_name(k))
        write_field_csv(p, s)
        paths.append(p)
    return paths


def read_trajectory(directory) -> Trajectory:
    from .discretization import read_field_csv

    with open(os.path.join(directory, MASS_TRACE), newline="") as fh:
        rows = list(csv.DictReader(fh))
    samples, trace = [], []
    for k, row in enumerate(rows):
        t = float(row["t"])
        samples.append(read_field_csv(os.path.join(directory, snapshot_name(k)), t=t))
        trace.append((t, float(row["rho"])))
    return Trajectory(samples, trace, {}, "loaded")

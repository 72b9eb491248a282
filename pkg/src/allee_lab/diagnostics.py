"""Classification of runs, mass-balance residuals and a-priori envelopes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .discretization import Field
from .integrator import Trajectory
from .model import ModelSpec
from . import oracles

EXTINCT = "Extinct"
PERSISTENT = "Persistent"
UNDETERMINED = "Undetermined"
_SHORT = {EXTINCT: "E", PERSISTENT: "P", UNDETERMINED: "U"}

RESIDUAL_FLOOR = 1e-8
ENVELOPE_SLACK = 1e-2


@dataclass(frozen=True)
class Outcome:
    label: str
    peak: float
    center: float
    mass_final: float

    @property
    def short(self) -> str:
        return _SHORT[self.label]

    def as_dict(self) -> dict:
        return asdict(self)


def label_for_peak(peak: float, eps: float) -> str:
    if peak < eps:
        return EXTINCT
    if peak > 2.0 * eps:
        return PERSISTENT
    return UNDETERMINED


def classify(final: Field, eps: float) -> Outcome:
    """Extinct below ``eps``, Persistent above ``2 eps``, otherwise Undetermined."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    peak = final.peak
    return Outcome(label_for_peak(peak, eps), peak, final.center, final.mass())


# ---------------------------------------------------------------------------
# mass balance
# ---------------------------------------------------------------------------


def mass_rhs(field: Field, model: ModelSpec) -> float:
    """Quadrature of ``int r u - rho^2 - int f(u)``."""
    g = field.grid
    u = field.values
    rho = float(g.weights @ u)
    return float(g.weights @ (model.fitness(g.theta) * u - model.allee(u))) - rho * rho


def mass_balance_residual(traj: Trajectory, model: ModelSpec) -> dict:
    """Centred three-point derivative of the sampled mass against its identity.

    Residuals are divided by ``max(sup_t |rho'|, 1e-8)`` so that a flat trace
    does not blow up the ratio.  Spacing may be non-uniform (the last sample
    of an early-stopped run); the three-point formula stays second order.
    """
    t = np.array([tt for tt, _ in traj.mass_trace])
    rho = np.array([m for _, m in traj.mass_trace])
    if len(t) < 3:
        raise ValueError("mass balance needs at least 3 samples")
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    fd = (-h1 / (h0 * (h0 + h1)) * rho[:-2]
          + (h1 - h0) / (h0 * h1) * rho[1:-1]
          + h0 / (h1 * (h0 + h1)) * rho[2:])
    exact = np.array([mass_rhs(s, model) for s in traj.samples[1:-1]])
    scale = max(float(np.max(np.abs(exact))), RESIDUAL_FLOOR)
    rel = np.abs(fd - exact) / scale
    return {
        "max": float(rel.max()),
        "mean": float(rel.mean()),
        "argmax_t": float(t[1:-1][int(rel.argmax())]),
        "scale": scale,
        "n": int(rel.size),
    }


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def _first_violation(times, values, bound):
    margin = bound * (1.0 + ENVELOPE_SLACK) - values
    bad = np.flatnonzero(margin < 0)
    first = None if bad.size == 0 else (float(times[bad[0]]), float(margin[bad[0]]))
    return bool(bad.size == 0), float(margin.min()) if margin.size else math.inf, first


def envelope_check(traj: Trajectory, model: ModelSpec) -> dict:
    """Compare sampled peaks with the space-independent supersolution and the
    heat-kernel bound.  The former needs a fitness bounded below."""
    times = traj.times
    peaks = traj.peaks
    M = float(peaks[0])
    rho0 = float(traj.mass_trace[0][1])
    report = {"M": M, "rho0": rho0}

    if np.isfinite(model.fitness.r_min) and rho0 > 0 and M > 0:
        K = model.K
        ubar = oracles.envelope_ubar(M, model.r_max, K, rho0, times - times[0])
        ok, margin, first = _first_violation(times, peaks, ubar)
        report["ubar"] = {"checked": True, "ok": ok, "min_margin": margin, "first_violation": first, "K": K}
        if rho0 > model.r_max:
            ts = oracles.tstar(model.r_max, K, rho0)
            report["ubar"]["tstar"] = ts
            report["ubar"]["ubar_min"] = oracles.ubar_min(M, model.r_max, K, rho0)
    else:
        report["ubar"] = {"checked": False, "ok": True, "reason": "fitness unbounded below or zero data"}

    tau = times - times[0]
    pos = tau > 0
    heat = oracles.heat_kernel_bound(model.r_max, rho0, tau[pos])
    ok, margin, first = _first_violation(times[pos], peaks[pos], heat)
    report["heat_kernel"] = {"checked": True, "ok": ok, "min_margin": margin, "first_violation": first}
    report["ok"] = report["ubar"]["ok"] and ok
    return report


def g_factor(x: float, r_max: float, K: float) -> float:
    q = r_max / K
    return (r_max / x) ** q * ((x + K) / (r_max + K)) ** (1.0 + q)


def extinction_sufficient(u0_sup: float, u0_mass: float, r_max: float, K: float, eps: float) -> bool:
    """Sufficient condition for extinction relating the sup and the mass of ``u0``."""
    for name, v in (("u0_sup", u0_sup), ("u0_mass", u0_mass), ("r_max", r_max), ("K", K), ("eps", eps)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if u0_mass <= r_max:
        return False
    return bool(u0_sup < eps * g_factor(u0_mass, r_max, K))


# ---------------------------------------------------------------------------
# scenarios along a family
# ---------------------------------------------------------------------------


def _labels(outcomes) -> list:
    out = []
    for o in outcomes:
        lab = o.label if isinstance(o, Outcome) else str(o)
        lab = {"E": EXTINCT, "P": PERSISTENT, "U": UNDETERMINED}.get(lab, lab)
        if lab not in _SHORT:
            raise ValueError(f"unknown label {lab!r}")
        out.append(lab)
    return out


def _collapse(labels: list) -> list:
    """Replace each Undetermined entry by its nearest decided neighbour."""
    decided = [i for i, lab in enumerate(labels) if lab != UNDETERMINED]
    out = list(labels)
    for i, lab in enumerate(labels):
        if lab != UNDETERMINED:
            continue
        left = max((j for j in decided if j < i), default=None)
        right = min((j for j in decided if j > i), default=None)
        cands = [j for j in (left, right) if j is not None]
        dist = min(abs(i - j) for j in cands)
        near = {labels[j] for j in cands if abs(i - j) == dist}
        out[i] = near.pop() if len(near) == 1 else UNDETERMINED
    return out


def detect_scenario(outcomes: Sequence) -> str:
    """Scenario label of a row ordered by increasing family parameter.

    Returns ``"E"``, ``"E*"``, ``"EPE"`` or ``"EP"``; other run patterns are
    spelled out (``"P"``, ``"PE"``, ``"EPEP"``...).  ``"E*"`` is a heuristic:
    a single Undetermined entry with Extinct on both sides and nowhere else.
    """
    labels = _labels(outcomes)
    if len(labels) < 3:
        raise ValueError("scenario detection needs at least 3 outcomes")
    if all(lab == UNDETERMINED for lab in labels):
        raise ValueError("no decidable outcome in row")

    und = [i for i, lab in enumerate(labels) if lab == UNDETERMINED]
    if (len(und) == 1 and 0 < und[0] < len(labels) - 1
            and all(lab == EXTINCT for lab in labels if lab != UNDETERMINED)):
        return "E*"

    runs = []
    for lab in _collapse(labels):
        if lab == UNDETERMINED:
            continue
        c = _SHORT[lab]
        if not runs or runs[-1] != c:
            runs.append(c)
    return "".join(runs)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def check_invariants(traj: Trajectory, model: ModelSpec, atol: float = 1e-9, tau: float = 1.0) -> dict:
    """Nonnegativity, mass bound, smoothing bound, radial monotonicity and
    ``u <= rho / (2|theta|)``.

    The smoothing bound compares ``max u(t + tau)`` with the heat-kernel
    bound from ``rho(t)`` for sampled ``t >= tau``.  Radial checks only
    apply when fitness and data are radial.  Returns a dict of
    ``name -> {"ok", "violations", "worst"}``.
    """
    grid = traj.grid
    rho0 = float(traj.mass_trace[0][1])
    mass_cap = max(rho0, model.r_max) * (1.0 + ENVELOPE_SLACK)
    slack = 10.0 * atol
    c = int(np.argmin(np.abs(grid.theta)))
    radial = model.fitness.radial and c == grid.n - 1 - c and abs(grid.theta[c]) < 1e-12
    r_abs = np.abs(grid.theta)

    res = {name: {"ok": True, "violations": 0, "worst": 0.0}
           for name in ("nonnegative", "mass_bound", "smoothing_bound", "radial_monotone", "mass_sup_bound")}

    def hit(name, n, worst):
        if n:
            d = res[name]
            d["ok"] = False
            d["violations"] += int(n)
            d["worst"] = max(d["worst"], float(worst))

    for s, (_, rho) in zip(traj.samples, traj.mass_trace):
        u = s.values
        hit("nonnegative", np.count_nonzero(u < 0), -u.min())
        hit("mass_bound", int(rho > mass_cap), rho - mass_cap)
        if radial:
            right = np.diff(u[c:])
            left = np.diff(u[c::-1])
            inc = np.concatenate([right, left]) - slack
            hit("radial_monotone", np.count_nonzero(inc > 0), inc.max())
            off = r_abs > 0
            excess = u[off] - rho / (2.0 * r_abs[off]) * (1.0 + ENVELOPE_SLACK) - slack
            hit("mass_sup_bound", np.count_nonzero(excess > 0), excess.max())
    times = traj.times
    peaks = traj.peaks
    masses = np.array([m for _, m in traj.mass_trace])
    kern = math.exp(model.r_max * tau) / math.sqrt(4 * math.pi * tau) * (1.0 + ENVELOPE_SLACK)
    for i, t in enumerate(times):
        if t < tau - 1e-12:
            continue
        k = np.flatnonzero(np.abs(times - (t + tau)) < 1e-9)
        if k.size:
            excess = peaks[k[0]] - kern * masses[i] - slack
            hit("smoothing_bound", int(excess > 0), excess)
    if not radial:
        res["radial_monotone"]["skipped"] = res["mass_sup_bound"]["skipped"] = True
    res["ok"] = all(v["ok"] for v in res.values() if isinstance(v, dict))
    return res


def report_json(outcome: Outcome, residuals=None, envelope=None, invariants=None) -> dict:
    """Serializable summary ``{label, peak, center, mass_final, residuals, envelope_margins}``."""
    out = outcome.as_dict()
    out["residuals"] = residuals
    out["envelope_margins"] = envelope
    if invariants is not None:
        out["invariants"] = invariants
    return out

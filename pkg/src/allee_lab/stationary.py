"""Ground states for constant fitness by the energy method.

For mass parameter ``lam`` in ``(0, r)`` a symmetric, decreasing solution of
``p'' + r p - lam p - f(p) = 0`` satisfies ``(p')^2 = 2 G(p)`` with
``G(v) = (lam - r) v^2 / 2 + F(v)`` and ``F' = f``.  Where ``p >= 2 eps`` the
sink vanishes and ``p`` is an exact cosine; below ``2 eps`` it follows the
first-order ODE ``p' = -sqrt(2 G(p))``.  A stationary state of the full
equation is a ``lam`` whose profile has mass ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .discretization import Field, Grid, laplacian_values
from .model import SCAN_POINTS, NoAllee, ValidationError

TAIL_FLOOR = 1e-14
QUAD_RTOL = 1e-11
ENDPOINT_SAMPLES = 64


class DegenerateProfileError(ValueError):
    pass


class BumpAssumptionError(ValidationError):
    """``G`` fails to stay positive, or ``f`` is not an admissible bump."""


class BracketError(ValueError):
    pass


def _eps_of(allee) -> float:
    eps = getattr(allee, "eps", None)
    if eps is None:
        if getattr(allee, "support", None) is None:
            raise BumpAssumptionError(f"{allee.kind} sink has no compact support")
        eps = allee.support / 2.0
    return float(eps)


def bump_integral(allee) -> float:
    """``int_0^{2 eps} f`` by adaptive quadrature."""
    eps = _eps_of(allee)
    val, _ = quad(lambda s: float(allee(s)), 0.0, 2.0 * eps, epsabs=0.0, epsrel=1e-12,
                  limit=200, points=[eps])
    return val


def check_admissible(allee, tol: float = 1e-12) -> list:
    """Monotone-bump shape test: ``f' >= 0`` on ``(0, eps)``, ``f' <= 0`` on
    ``(eps, 2 eps)``, ``f = 0`` beyond.  Returns a list of failures."""
    if isinstance(allee, NoAllee):
        return ["no Allee sink"]
    eps = _eps_of(allee)
    s = np.linspace(0.0, 3.0 * eps, 3 * SCAN_POINTS + 1)[1:]
    df = allee.deriv(s)
    fs = allee(s)
    scale = max(1.0, float(np.max(np.abs(df))))
    problems = []
    rising = s < eps
    falling = (s > eps) & (s < 2 * eps)
    if np.any(df[rising] < -tol * scale):
        problems.append(f"f' < 0 at s={s[rising][np.argmin(df[rising])]:.4g} < eps")
    if np.any(df[falling] > tol * scale):
        problems.append(f"f' > 0 at s={s[falling][np.argmax(df[falling])]:.4g} in (eps, 2eps)")
    if np.any(fs[s >= 2 * eps] != 0.0):
        problems.append("f does not vanish beyond 2 eps")
    if np.any(fs < 0):
        problems.append("f < 0 somewhere")
    return problems


@dataclass(frozen=True)
class BumpCheck:
    """Both sides of ``2 eps^2 <= I/r < 2 eps^2 + r^3/128 - sqrt(2) eps r^{3/2}/8``."""

    scaled_integral: float
    lower: float
    upper: float
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok

    def as_dict(self) -> dict:
        return {"scaled_integral": self.scaled_integral, "lower": self.lower, "upper": self.upper,
                "lower_ok": self.lower_ok, "upper_ok": self.upper_ok}


def bump_condition(r: float, allee, rel: float = 1e-9) -> BumpCheck:
    eps = _eps_of(allee)
    scaled = bump_integral(allee) / r
    lower = 2.0 * eps**2
    upper = lower + r**3 / 128.0 - math.sqrt(2.0) * eps * r**1.5 / 8.0
    # the lower side holds with equality for the triangle: allow roundoff
    return BumpCheck(scaled, lower, upper, scaled >= lower * (1.0 - rel), scaled < upper)


@dataclass(frozen=True)
class EnergyModel:
    r: float
    allee: object
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam < self.r:
            raise ValueError(f"mass parameter {self.lam:g} outside [0, r={self.r:g})")

    @property
    def eps(self) -> float:
        return _eps_of(self.allee)

    @cached_property
    def bump_area(self) -> float:
        return bump_integral(self.allee)

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return (self.lam - self.r) * s + self.allee(s)

    def G(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * (self.lam - self.r) * v * v + self.allee.antiderivative(np.minimum(v, 2 * self.eps))

    def G_over_v2(self, v):
        """``2 G(v) / v^2``, finite at ``v = 0``."""
        v = np.asarray(v, dtype=float)
        safe = np.where(v > 0, v, 1.0)
        F = self.allee.antiderivative(np.minimum(v, 2 * self.eps))
        return np.where(v > 0, (self.lam - self.r) + 2.0 * F / (safe * safe),
                        (self.lam - self.r) + self.allee.slope0)

    @property
    def omega(self) -> float:
        """Frequency ``sqrt(r - lam)`` of the cosine segment."""
        return math.sqrt(self.r - self.lam)


def alpha_lambda(em: EnergyModel) -> float:
    """Centre height: the positive zero of ``G`` beyond the bump."""
    return math.sqrt(2.0 * em.bump_area / (em.r - em.lam))


def theta0(em: EnergyModel, alpha: float) -> float:
    """Trait where the cosine segment reaches ``2 eps``."""
    if not alpha > 2 * em.eps:
        raise DegenerateProfileError(f"alpha={alpha:g} <= 2 eps={2 * em.eps:g}")
    return math.acos(2 * em.eps / alpha) / em.omega


def cosine_segment(em: EnergyModel, theta, alpha: float = None):
    alpha = alpha_lambda(em) if alpha is None else alpha
    return alpha * np.cos(np.asarray(theta, dtype=float) * em.omega)


def check_energy_positive(em: EnergyModel, alpha: float) -> None:
    v = np.linspace(0.0, alpha, SCAN_POINTS + 1)[1:-1]
    Gv = em.G(v)
    if np.any(Gv <= 0):
        raise BumpAssumptionError(f"G <= 0 at v={v[np.argmax(Gv <= 0)]:.4g} inside (0, alpha)")


def profile_mass(em: EnergyModel) -> float:
    """Full-line mass ``2 int_0^alpha v / sqrt(2 G(v)) dv``.

    On ``[2 eps, alpha]`` the profile is the cosine and the integral is
    ``sqrt(alpha^2 - 4 eps^2) / omega`` in closed form, which removes the
    square-root singularity at ``v = alpha``.  The rest is a regular
    integrand, since ``2G(v)/v^2`` stays positive as ``v -> 0``.
    """
    if not 0.0 < em.lam < em.r:
        raise ValueError("mass parameter must lie in (0, r)")
    alpha = alpha_lambda(em)
    eps = em.eps
    if alpha <= 2 * eps:
        raise DegenerateProfileError(f"alpha={alpha:g} <= 2 eps")
    check_energy_positive(em, alpha)
    core = math.sqrt(alpha**2 - 4 * eps**2) / em.omega

    def integrand(v):
        return 1.0 / math.sqrt(float(em.G_over_v2(v)))

    # near v = 2 eps the integrand sharpens as lam -> 0 (G(2 eps) -> 0)
    tail, _ = quad(integrand, 0.0, 2 * eps, epsabs=0.0, epsrel=QUAD_RTOL, limit=400,
                   points=[eps, 2 * eps * (1 - 1e-3)])
    return 2.0 * (core + tail)


def j(em: EnergyModel) -> float:
    return profile_mass(em) - em.lam


def _j(r, allee, lam):
    return j(EnergyModel(r, allee, lam))


def admissibility_report(r: float, allee) -> dict:
    shape = check_admissible(allee)
    bump = bump_condition(r, allee) if not isinstance(allee, NoAllee) else None
    return {"shape_failures": shape, "bump": bump.as_dict() if bump else None,
            "ok": not shape and bump is not None and bump.ok}


def find_stationary_pair(r: float, allee, xtol: float = 1e-12):
    """The two mass roots ``lam1 < r/2 < lam2`` of :func:`j`."""
    shape = check_admissible(allee)
    if shape:
        raise BumpAssumptionError("sink is not an admissible bump: " + "; ".join(shape))
    bump = bump_condition(r, allee)
    if not bump.lower_ok:
        raise BumpAssumptionError(
            f"int f / r = {bump.scaled_integral:.6g} below 2 eps^2 = {bump.lower:.6g}")
    mid = 0.5 * r
    j_mid = _j(r, allee, mid)
    if not j_mid < 0:
        raise BracketError(f"j(r/2) = {j_mid:.4g} >= 0: no bracket")

    offsets = mid * np.logspace(-6, 0, ENDPOINT_SAMPLES)[:-1]
    roots = []
    for lams in (offsets, r - offsets):
        # walk outwards from r/2 to the first sign change
        prev_lam, prev_j = mid, j_mid
        root = None
        for lam in lams[::-1]:
            jv = _j(r, allee, float(lam))
            if jv > 0:
                lo, hi = sorted((prev_lam, float(lam)))
                root = brentq(lambda x: _j(r, allee, x), lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
                break
            prev_lam, prev_j = float(lam), jv
        if root is None:
            raise BracketError("j has no sign change on this side of r/2")
        roots.append(root)
    return roots[0], roots[1]


# ---------------------------------------------------------------------------
# profiles on a grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    lam: float
    alpha: float
    theta0: float
    mass: float
    theta_samples: np.ndarray
    p_samples: np.ndarray
    grid: Grid

    @property
    def field(self) -> Field:
        return Field(self.grid, 0.0, self.p_samples)

    @property
    def peak(self) -> float:
        return float(self.p_samples.max())


def _tail_solution(em: EnergyModel, start: float, stop: float):
    """``y = log p`` on ``[start, stop]`` from ``p(start) = 2 eps``.

    ``y' = -sqrt(2G(p))/p`` is smooth and bounded, and integrating away from
    the cosine segment runs in the decaying, well-conditioned direction.
    """
    log_floor = math.log(TAIL_FLOOR)

    def rhs(_, y):
        return [-math.sqrt(max(float(em.G_over_v2(math.exp(y[0]))), 0.0))]

    def floor(_, y):
        return y[0] - log_floor

    floor.terminal = True
    return solve_ivp(rhs, (start, stop), [math.log(2 * em.eps)], method="DOP853",
                     rtol=1e-12, atol=1e-13, dense_output=True, events=floor)


def build_profile(lam: float, r: float, allee, grid: Grid) -> StationaryProfile:
    """Sample the symmetric profile with mass parameter ``lam`` on ``grid``."""
    if not 0.0 < lam < r:
        raise ValueError(f"lam={lam:g} outside (0, r={r:g})")
    em = EnergyModel(r, allee, lam)
    alpha = alpha_lambda(em)
    t0 = theta0(em, alpha)
    mass = profile_mass(em)

    x = np.abs(grid.theta)
    p = np.zeros_like(x)
    inner = x <= t0
    p[inner] = alpha * np.cos(x[inner] * em.omega)
    outer = ~inner
    if np.any(outer):
        sol = _tail_solution(em, t0, float(x.max()))
        t_last = sol.t[-1]
        in_range = outer & (x <= t_last)
        p[in_range] = np.exp(sol.sol(x[in_range])[0])
    p[p < TAIL_FLOOR] = 0.0
    # enforce exact symmetry about the centre node
    p = 0.5 * (p + p[::-1])
    return StationaryProfile(lam, alpha, t0, mass, np.array(grid.theta), p, grid)


def residual_pde(profile: StationaryProfile, r: float, allee) -> dict:
    """Max interior ``|Lap_h p + r p - mass p - f(p)|`` and ``|mass - lam|``."""
    p = profile.p_samples
    h = profile.grid.h
    lap = laplacian_values(p, h)[1:-1]
    pi = p[1:-1]
    res = np.abs(lap + r * pi - profile.mass * pi - allee(pi))
    grid_mass = float(profile.grid.weights @ p)
    return {
        "max_residual": float(res.max()) if res.size else 0.0,
        "relative_residual": float(res.max() / max(p.max(), 1e-300)) if res.size else 0.0,
        "mass_error": abs(profile.mass - profile.lam),
        "grid_mass": grid_mass,
        "grid_mass_error": abs(grid_mass - profile.lam),
    }

"""Fitness landscapes, Allee sinks and initial-data families.

Every spec object here is an immutable dataclass that evaluates
vectorised over numpy arrays.  The three families are

* fitness ``r(theta)``: :class:`ConstantFitness`, :class:`QuadraticFitness`,
  :class:`GaussianDipFitness`, :class:`TabulatedFitness`;
* Allee sink ``f(s)``: :class:`NoAllee`, :class:`PolynomialBump`,
  :class:`SmoothedTriangle`, :class:`ExpAllee`;
* initial data ``u0(theta)``: :class:`Rectangle`, :class:`ScaledPlateau`,
  :class:`TabulatedInitial`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

SCAN_POINTS = 10_000


class ValidationError(ValueError):
    """A model violates one of the structural assumptions."""


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _tuple_of_floats(values) -> tuple:
    return tuple(float(v) for v in values)


def _check_table(theta: tuple, values: tuple):
    if len(theta) < 2 or len(theta) != len(values):
        raise ValidationError("table needs >= 2 nodes and matching value count")
    if not all(np.isfinite(theta)) or not all(np.isfinite(values)):
        raise ValidationError("table entries must be finite")
    if np.any(np.diff(theta) <= 0):
        raise ValidationError("table nodes must be strictly increasing")


# ---------------------------------------------------------------------------
# fitness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantFitness:
    r_max: float
    kind = "constant"

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return np.full(theta.shape, float(self.r_max))

    @property
    def r_min(self) -> float:
        return float(self.r_max)

    @property
    def radial(self) -> bool:
        return True


@dataclass(frozen=True)
class QuadraticFitness:
    """``r(theta) = r_max - alpha**2 * theta**2``."""

    r_max: float
    alpha: float
    kind = "quadratic"

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return self.r_max - self.alpha**2 * theta**2

    @property
    def r_min(self) -> float:
        return -np.inf

    @property
    def radial(self) -> bool:
        return True


@dataclass(frozen=True)
class GaussianDipFitness:
    """``r(theta) = a * (b * exp(-c theta^2) - 1)``, bounded below by ``-a``."""

    a: float
    b: float
    c: float
    kind = "gaussian_dip"

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return self.a * (self.b * np.exp(-self.c * theta**2) - 1.0)

    @property
    def r_max(self) -> float:
        return float(self.a * (self.b - 1.0))

    @property
    def r_min(self) -> float:
        return float(-self.a)

    @property
    def radial(self) -> bool:
        return self.a * self.b >= 0 and self.c >= 0


@dataclass(frozen=True)
class TabulatedFitness:
    """Piecewise-linear fitness with constant extrapolation of the end values."""

    theta: tuple
    values: tuple
    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "theta", _tuple_of_floats(self.theta))
        object.__setattr__(self, "values", _tuple_of_floats(self.values))
        _check_table(self.theta, self.values)

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return np.interp(theta, self.theta, self.values)

    @property
    def r_max(self) -> float:
        return float(max(self.values))

    @property
    def r_min(self) -> float:
        return float(min(self.values))

    @property
    def radial(self) -> bool:
        # even and nonincreasing in |theta|, probed on a symmetric scan
        x = np.linspace(0.0, max(abs(self.theta[0]), abs(self.theta[-1])), 2001)
        right, left = self(x), self(-x)
        return bool(np.allclose(right, left) and np.all(np.diff(right) <= 1e-12))


Fitness = Union[ConstantFitness, QuadraticFitness, GaussianDipFitness, TabulatedFitness]


def eval_fitness(spec: Fitness, theta):
    return spec(theta)


# ---------------------------------------------------------------------------
# Allee sinks
# ---------------------------------------------------------------------------


def _check_nonnegative(s):
    s = _as_float_array(s)
    if np.any(s < 0):
        raise ValueError("Allee function evaluated at a negative density")
    return s


class _AlleeBase:
    """Shared helpers; subclasses provide ``_f``, ``_df``, ``_rate``, ``_F``."""

    # upper end of the scan interval used for thresholds and Lipschitz bounds
    scan_upper: float = 1.0
    support: Optional[float] = None

    def __call__(self, s):
        return self._f(_check_nonnegative(s))

    def deriv(self, s):
        return self._df(_check_nonnegative(s))

    def rate(self, s):
        """``f(s)/s`` continued by ``f'(0)`` at zero; argument assumed >= 0."""
        return self._rate(_as_float_array(s))

    def antiderivative(self, s):
        """``F(s) = int_0^s f``."""
        return self._F(_check_nonnegative(s))

    @property
    def slope0(self) -> float:
        return float(self._df(np.array(0.0)))

    @cached_property
    def scan_grid(self) -> np.ndarray:
        return np.linspace(self.scan_upper / SCAN_POINTS, self.scan_upper, SCAN_POINTS)

    @cached_property
    def lipschitz(self) -> float:
        """Largest scanned ``|f'|`` on ``[0, 2 * scan_upper]``."""
        s = np.linspace(0.0, 2.0 * self.scan_upper, 2 * SCAN_POINTS + 1)
        return float(np.max(np.abs(self._df(s))))

    @cached_property
    def sup(self) -> float:
        s = np.linspace(0.0, 2.0 * self.scan_upper, 2 * SCAN_POINTS + 1)
        return float(np.max(self._f(s)))


@dataclass(frozen=True)
class NoAllee(_AlleeBase):
    kind = "none"

    def _f(self, s):
        return np.zeros_like(s)

    _df = _rate = _F = _f


@dataclass(frozen=True)
class PolynomialBump(_AlleeBase):
    """``f(s) = A s (1 - s/(2 eps))**2`` on ``[0, 2 eps)``, zero beyond."""

    A: float
    eps: float
    kind = "polynomial_bump"

    @property
    def scan_upper(self) -> float:
        return 2.0 * self.eps

    @property
    def support(self) -> float:
        return 2.0 * self.eps

    def _rate(self, s):
        x = np.clip(1.0 - s / (2.0 * self.eps), 0.0, None)
        return self.A * x * x

    def _f(self, s):
        return s * self._rate(s)

    def _df(self, s):
        x = np.clip(1.0 - s / (2.0 * self.eps), 0.0, None)
        return self.A * (x * x - s * x / self.eps)

    def _F(self, s):
        s = np.minimum(s, 2.0 * self.eps)
        c = 1.0 / (2.0 * self.eps)
        return self.A * (s**2 / 2.0 - 2.0 * c * s**3 / 3.0 + c * c * s**4 / 4.0)


@dataclass(frozen=True)
class SmoothedTriangle(_AlleeBase):
    """C^1 version of the triangular bump ``2 r (eps - |s - eps|)^+``.

    The derivative is the continuous piecewise-linear function with knots
    ``0, eps-delta, eps, eps+delta, 2eps-delta, 2eps`` and knot values
    ``A * (1, 1, 0, -b, -b, 0)``.  ``b`` makes ``f(2 eps) = 0`` and ``A`` is
    chosen so that ``int_0^{2eps} f = 2 r eps^2`` exactly, as for the sharp
    triangle.  ``f`` stays linear near 0, so ``f'(0) = A`` is close to ``2r``.
    """

    r: float
    eps: float
    delta: Optional[float] = None
    kind = "smoothed_triangle"

    def __post_init__(self):
        if self.delta is None:
            object.__setattr__(self, "delta", self.eps / 10.0)
        if not 0.0 < self.delta < self.eps / 2.0:
            raise ValidationError("SmoothedTriangle needs 0 < delta < eps/2")

    @property
    def scan_upper(self) -> float:
        return 2.0 * self.eps

    @property
    def support(self) -> float:
        return 2.0 * self.eps

    @cached_property
    def _pieces(self):
        e, d = self.eps, self.delta
        b = (e - d / 2.0) / (e - d)
        knots = np.array([0.0, e - d, e, e + d, 2 * e - d, 2 * e])
        slopes = np.array([1.0, 1.0, 0.0, -b, -b, 0.0])
        widths = np.diff(knots)
        # values of the unit-amplitude shape and of its antiderivative at knots
        vals = np.concatenate([[0.0], np.cumsum(widths * (slopes[:-1] + slopes[1:]) / 2.0)])
        areas = widths * vals[:-1] + widths**2 * (2 * slopes[:-1] + slopes[1:]) / 6.0
        prims = np.concatenate([[0.0], np.cumsum(areas)])
        amplitude = 2.0 * self.r * e**2 / prims[-1]
        return knots, amplitude * slopes, amplitude * vals, amplitude * prims

    def _locate(self, s):
        knots, slopes, vals, prims = self._pieces
        k = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(knots) - 2)
        x = np.clip(s, 0.0, knots[-1]) - knots[k]
        w = knots[k + 1] - knots[k]
        curv = (slopes[k + 1] - slopes[k]) / w
        return k, x, curv

    def _f(self, s):
        _, slopes, vals, _ = self._pieces
        k, x, curv = self._locate(s)
        out = vals[k] + slopes[k] * x + 0.5 * curv * x * x
        return np.where(s >= self.support, 0.0, out)

    def _df(self, s):
        _, slopes, _, _ = self._pieces
        k, x, curv = self._locate(s)
        out = slopes[k] + curv * x
        return np.where(s >= self.support, 0.0, out)

    def _F(self, s):
        _, slopes, vals, prims = self._pieces
        k, x, curv = self._locate(s)
        return prims[k] + vals[k] * x + slopes[k] * x * x / 2.0 + curv * x**3 / 6.0

    def _rate(self, s):
        # f is exactly A*s on [0, eps - delta]
        _, slopes, _, _ = self._pieces
        safe = np.where(s > 0.0, s, 1.0)
        return np.where(s > 0.0, self._f(s) / safe, slopes[0])


@dataclass(frozen=True)
class ExpAllee(_AlleeBase):
    """``f(u) = r_max u exp(1/2 - u)``."""

    r_max: float
    kind = "exp"
    scan_upper = 2.0

    def _rate(self, s):
        return self.r_max * np.exp(0.5 - s)

    def _f(self, s):
        return s * self._rate(s)

    def _df(self, s):
        return self.r_max * np.exp(0.5 - s) * (1.0 - s)

    def _F(self, s):
        return self.r_max * np.exp(0.5) * (1.0 - (s + 1.0) * np.exp(-s))


Allee = Union[NoAllee, PolynomialBump, SmoothedTriangle, ExpAllee]


def eval_allee(spec: Allee, s):
    return spec(s)


def eval_allee_deriv(spec: Allee, s):
    return spec.deriv(s)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def plateau(x):
    """Smooth plateau: 1 on [-1, 1], 0 outside (-2, 2), C^1 cubic ramp between."""
    t = np.clip(np.abs(_as_float_array(x)) - 1.0, 0.0, 1.0)
    return 1.0 - 3.0 * t**2 + 2.0 * t**3


@dataclass(frozen=True)
class Rectangle:
    """``H`` on the closed interval ``[-L/2, L/2]``, zero elsewhere."""

    H: float
    L: float
    kind = "rectangle"

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return np.where(np.abs(theta) <= self.L / 2.0, float(self.H), 0.0)

    def on_grid(self, theta, h: float):
        """Nodal samples; a node sitting on a jump gets the average ``H/2``.

        With this convention the trapezoid mass is exactly ``H L`` whenever
        ``L/2`` is a node.
        """
        theta = _as_float_array(theta)
        gap = np.abs(theta) - self.L / 2.0
        edge = np.abs(gap) <= 1e-9 * h
        return np.where(edge, 0.5 * self.H, np.where(gap < 0, float(self.H), 0.0))

    @property
    def sup(self) -> float:
        return float(self.H)

    @property
    def half_support(self) -> float:
        return self.L / 2.0

    @property
    def radial(self) -> bool:
        return True


@dataclass(frozen=True)
class ScaledPlateau:
    """``amplitude * plateau(theta / sigma)``."""

    amplitude: float
    sigma: float
    kind = "plateau"

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return self.amplitude * plateau(theta / self.sigma)

    @property
    def sup(self) -> float:
        return float(self.amplitude)

    @property
    def half_support(self) -> float:
        return 2.0 * self.sigma

    @property
    def radial(self) -> bool:
        return True


@dataclass(frozen=True)
class TabulatedInitial:
    """Piecewise-linear data, zero outside the tabulated range."""

    theta: tuple
    values: tuple
    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "theta", _tuple_of_floats(self.theta))
        object.__setattr__(self, "values", _tuple_of_floats(self.values))
        _check_table(self.theta, self.values)

    def __call__(self, theta):
        theta = _as_float_array(theta)
        return np.interp(theta, self.theta, self.values, left=0.0, right=0.0)

    @property
    def sup(self) -> float:
        return float(max(self.values))

    @property
    def half_support(self) -> float:
        return max(abs(self.theta[0]), abs(self.theta[-1]))

    @property
    def radial(self) -> bool:
        x = np.linspace(0.0, self.half_support, 2001)
        right, left = self(x), self(-x)
        return bool(np.allclose(right, left) and np.all(np.diff(right) <= 1e-12))


Initial = Union[Rectangle, ScaledPlateau, TabulatedInitial]


def eval_initial(spec: Initial, theta):
    return spec(theta)


# ---------------------------------------------------------------------------
# assembled model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    fitness: Fitness
    allee: Allee = field(default_factory=NoAllee)
    initial: Optional[Initial] = None

    @property
    def r_max(self) -> float:
        return float(self.fitness.r_max)

    @property
    def radial(self) -> bool:
        return self.fitness.radial and (self.initial is None or self.initial.radial)

    @cached_property
    def eps_eff(self) -> float:
        return allee_threshold(self)

    @property
    def K(self) -> float:
        """Rate ``C_Lip - min(0, inf r)`` of the mass lower bound."""
        return self.allee.lipschitz - min(0.0, self.fitness.r_min)

    def with_initial(self, initial: Initial) -> "ModelSpec":
        return ModelSpec(self.fitness, self.allee, initial)


def allee_threshold(model: ModelSpec) -> float:
    """Largest scan point ``e`` with ``r_max s - f(s) < 0`` on all of ``(0, e]``."""
    allee = model.allee
    if isinstance(allee, NoAllee):
        raise ValidationError("no Allee effect: threshold undefined")
    s = allee.scan_grid
    ok = model.r_max * s - allee(s) < 0.0
    if not ok[0]:
        raise ValidationError(
            f"r_max*s - f(s) >= 0 near 0 (f'(0)={allee.slope0:g}, r_max={model.r_max:g})"
        )
    bad = np.flatnonzero(~ok)
    last = bad[0] - 1 if bad.size else len(s) - 1
    return float(s[last])


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append((name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.checks)

    @property
    def failures(self) -> list:
        return [(n, d) for n, p, d in self.checks if not p]

    def raise_if_failed(self):
        if not self.ok:
            msg = "; ".join(f"{n}: {d}" for n, d in self.failures)
            raise ValidationError(msg)

    def as_dict(self) -> dict:
        return {n: {"passed": p, "detail": d} for n, p, d in self.checks}


def validate_model(model: ModelSpec, grid=None, large_selection: bool = False) -> ValidationReport:
    """Check the structural assumptions; failures are collected, never raised.

    ``grid`` (a :class:`~allee_lab.discretization.Grid`) enables the support
    check.  ``large_selection`` adds the strong-selection conditions on a
    quadratic landscape and the matching bounds on ``f`` and ``u0``.
    """
    rep = ValidationReport()
    r_max = model.r_max
    rep.add("r_max>0", r_max > 0, f"r_max={r_max:g}")

    allee = model.allee
    if not isinstance(allee, NoAllee):
        f0 = float(allee(0.0))
        rep.add("f(0)=0", f0 == 0.0, f"f(0)={f0:g}")
        s = np.linspace(0.0, 2.0 * allee.scan_upper, 2 * SCAN_POINTS + 1)
        fs, dfs = allee(s), allee.deriv(s)
        rep.add("f>=0", bool(np.all(fs >= 0)), f"min f={fs.min():g}")
        bounded = bool(np.all(np.isfinite(fs)) and np.all(np.isfinite(dfs)))
        rep.add("f,f' bounded", bounded, f"max|f'|={np.max(np.abs(dfs)):g}")
        rep.add("f'(0)>r_max", allee.slope0 > r_max, f"f'(0)={allee.slope0:g}, r_max={r_max:g}")

    init = model.initial
    if init is not None:
        if grid is not None:
            values = init(grid.theta)
            rep.add("u0>=0", bool(np.all(values >= 0)), f"min u0={values.min():g}")
            inside = grid.theta_min < -init.half_support and init.half_support < grid.theta_max
            rep.add("u0 supported in grid", inside,
                    f"half support {init.half_support:g} vs ({grid.theta_min:g}, {grid.theta_max:g})")
        else:
            x = np.linspace(-init.half_support, init.half_support, 4001)
            rep.add("u0>=0", bool(np.all(init(x) >= 0)), "")

    if large_selection:
        fit = model.fitness
        if not isinstance(fit, QuadraticFitness):
            rep.add("quadratic fitness", False, f"got {fit.kind}")
        else:
            a2 = fit.alpha**2
            rep.add("1<=r_max<=alpha^2<=2r_max", 1.0 <= r_max <= a2 <= 2.0 * r_max,
                    f"r_max={r_max:g}, alpha^2={a2:g}")
        if not isinstance(allee, NoAllee):
            rep.add("|f|<=2r_max", allee.sup <= 2.0 * r_max, f"sup f={allee.sup:g}")
            rep.add("|f'|<=2r_max", allee.lipschitz <= 2.0 * r_max, f"sup|f'|={allee.lipschitz:g}")
        if init is not None:
            core = init(np.linspace(-0.5, 0.5, 101))
            rep.add("u0<=2r_max", init.sup <= 2.0 * r_max, f"sup u0={init.sup:g}")
            rep.add("u0>=r_max on [-1/2,1/2]", bool(np.all(core >= r_max)), f"min={core.min():g}")
    return rep

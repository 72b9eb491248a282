"""Uniform grid, Dirichlet Laplacian, trapezoid mass and the semi-discrete RHS."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import ModelSpec


class BlowupError(RuntimeError):
    """A non-finite value appeared during a computation."""

    def __init__(self, t: float, index: int, where: str = ""):
        self.t, self.index = t, index
        super().__init__(f"non-finite value at t={t:g}, node {index}{' in ' + where if where else ''}")


@dataclass(frozen=True)
class Grid:
    theta_min: float = -40.0
    theta_max: float = 40.0
    n: int = 801

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes")
        if not self.theta_max > self.theta_min:
            raise ValueError("grid needs theta_max > theta_min")

    @property
    def h(self) -> float:
        return (self.theta_max - self.theta_min) / (self.n - 1)

    @cached_property
    def theta(self) -> np.ndarray:
        nodes = self.theta_min + self.h * np.arange(self.n)
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = self.h / 2.0
        w.setflags(write=False)
        return w

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.theta_min, self.theta_max, factor * (self.n - 1) + 1)

    def sample(self, fn, t: float = 0.0) -> "Field":
        """Nodal values of ``fn``; initial-data specs may refine jump nodes."""
        if hasattr(fn, "on_grid"):
            values = fn.on_grid(self.theta, self.h)
        else:
            values = fn(self.theta)
        return Field(self, t, np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    t: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"field has {v.shape} values, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def peak(self) -> float:
        return float(self.values.max())

    @property
    def center(self) -> float:
        """Value at the node nearest to ``theta = 0``."""
        return float(self.values[int(np.argmin(np.abs(self.grid.theta)))])

    def mass(self) -> float:
        return total_mass(self)


def laplacian_values(u: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
    out[0] = -2.0 * u[0] + u[1]
    out[-1] = u[-2] - 2.0 * u[-1]
    return out / (h * h)


def laplacian(field: Field) -> Field:
    """Second-order central difference with zero ghost values outside the grid."""
    return Field(field.grid, field.t, laplacian_values(field.values, field.grid.h))


def total_mass(field: Field) -> float:
    return float(field.grid.weights @ field.values)


def rhs(model: ModelSpec, field: Field) -> Field:
    """``u'' + r u - rho u - f(u)`` at every node, ``rho`` from the current field."""
    g = field.grid
    u = field.values
    with np.errstate(all="ignore"):
        out = (laplacian_values(u, g.h) + model.fitness(g.theta) * u
               - total_mass(field) * u - model.allee(u))
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise BlowupError(field.t, int(bad[0]), "rhs")
    return Field(g, field.t, out)


def write_field_csv(path, field: Field) -> None:
    """Two columns ``theta,u``; floats written with shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        fh.write("theta,u\n")
        for th, u in zip(field.grid.theta, field.values):
            fh.write(f"{float(th)!r},{float(u)!r}\n")


def read_field_csv(path, t: float = 0.0) -> Field:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["theta", "u"]:
            raise ValueError(f"{path}: expected header 'theta,u', got {header}")
        rows = [(float(a), float(b)) for a, b in reader]
    theta = np.array([r[0] for r in rows])
    grid = Grid(float(theta[0]), float(theta[-1]), len(theta))
    if not np.allclose(theta, grid.theta, rtol=0, atol=1e-9 * max(1.0, grid.h)):
        raise ValueError(f"{path}: nodes are not uniformly spaced")
    return Field(grid, t, np.array([r[1] for r in rows]))

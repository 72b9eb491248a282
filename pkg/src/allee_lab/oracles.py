"""Closed-form reference values: Gaussian ground state and mass/height envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NoSteadyStateError(ValueError):
    pass


class NoInteriorMinimumError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianState:
    """Stationary state ``lam * sqrt(alpha/2pi) exp(-alpha theta^2/2)`` of the
    replicator-mutator flow with fitness ``r_max - alpha^2 theta^2``."""

    lam: float
    alpha: float
    r_max: float

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.lam * math.sqrt(self.alpha / (2 * math.pi)) * np.exp(-0.5 * self.alpha * theta**2)

    @property
    def peak(self) -> float:
        return self.lam * math.sqrt(self.alpha / (2 * math.pi))

    def sample(self, grid, t: float = 0.0):
        return grid.sample(self, t)


def _check_alpha(r_max, alpha):
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha >= r_max:
        raise NoSteadyStateError(f"alpha={alpha:g} >= r_max={r_max:g}: the stationary state vanishes")


def gaussian_ground_state(r_max: float, alpha: float) -> GaussianState:
    _check_alpha(r_max, alpha)
    return GaussianState(r_max - alpha, alpha, r_max)


def peak_height(r_max: float, alpha: float) -> float:
    _check_alpha(r_max, alpha)
    return (r_max - alpha) * math.sqrt(alpha) / math.sqrt(2 * math.pi)


def optimal_alpha(r_max: float) -> float:
    return r_max / 3.0


def logistic_mass(rho0: float, r_max: float, t):
    """Solution of ``rho' = r_max rho - rho^2``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-r_max * t)
    return r_max * rho0 / (rho0 + (r_max - rho0) * e)


def lower_mass(rho0: float, K: float, t):
    """Solution of ``rho' = -K rho - rho^2``: ``K / ((1 + K/rho0) e^{Kt} - 1)``."""
    t = np.asarray(t, dtype=float)
    return K / ((1.0 + K / rho0) * np.exp(K * t) - 1.0)


def envelope_ubar(M: float, r_max: float, K: float, rho0: float, t):
    """Space-independent supersolution ``M e^{r_max t} / (1 + rho0/K (1 - e^{-Kt}))``."""
    t = np.asarray(t, dtype=float)
    return M * np.exp(r_max * t) / (1.0 + rho0 / K * (1.0 - np.exp(-K * t)))


def tstar(r_max: float, K: float, rho0: float) -> float:
    """Time of the minimum of :func:`envelope_ubar` (where the lower mass equals r_max)."""
    if rho0 <= r_max:
        raise NoInteriorMinimumError(f"rho0={rho0:g} <= r_max={r_max:g}: envelope has no interior minimum")
    return math.log((rho0 * r_max + rho0 * K) / (rho0 * r_max + r_max * K)) / K


def ubar_min(M: float, r_max: float, K: float, rho0: float) -> float:
    if rho0 <= r_max:
        raise NoInteriorMinimumError(f"rho0={rho0:g} <= r_max={r_max:g}: envelope has no interior minimum")
    q = r_max / K
    return M * ((r_max + K) / (rho0 + K)) ** (1.0 + q) * (rho0 / r_max) ** q


def heat_kernel_bound(r_max: float, rho: float, tau):
    """``e^{r_max tau} rho / sqrt(4 pi tau)``: sup bound after time ``tau`` from mass ``rho``."""
    tau = np.asarray(tau, dtype=float)
    return np.exp(r_max * tau) / np.sqrt(4 * math.pi * tau) * rho

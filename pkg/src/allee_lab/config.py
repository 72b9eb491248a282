"""Flat ``key = value`` run configuration with dotted section names.

Example::

    # constant fitness, polynomial sink
    fitness.kind = constant
    fitness.r_max = 2
    allee.kind = polynomial_bump
    allee.A = 15
    allee.eps = 0.1
    initial.kind = rectangle
    initial.H = 1
    initial.L = 5
    sim.t_end = 5

Values are parsed as int, float, bool or string; a comma makes a list and
``lo:hi:n`` expands to ``n`` evenly spaced floats.
"""

from __future__ import annotations

import numpy as np

from .discretization import Grid
from .integrator import SimConfig
from .model import (ConstantFitness, ExpAllee, GaussianDipFitness, ModelSpec, NoAllee,
                    PolynomialBump, QuadraticFitness, Rectangle, ScaledPlateau, SmoothedTriangle,
                    ValidationError)


class ConfigError(ValidationError):
    pass


def _scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_value(text: str):
    text = text.strip()
    if text.count(":") == 2 and "," not in text:
        lo, hi, n = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
    if "," in text:
        return [_scalar(t.strip()) for t in text.split(",") if t.strip()]
    return _scalar(text)


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def section(cfg: dict, name: str) -> dict:
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}


def _num(d: dict, key: str, default=None, where=""):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing {where}{key}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {v!r}")
    return float(v)


def build_fitness(d: dict):
    kind = d.get("kind", "constant")
    w = "fitness."
    if kind == "constant":
        return ConstantFitness(_num(d, "r_max", where=w))
    if kind == "quadratic":
        return QuadraticFitness(_num(d, "r_max", where=w), _num(d, "alpha", where=w))
    if kind in ("gaussian_dip", "bounded"):
        return GaussianDipFitness(_num(d, "a", where=w), _num(d, "b", where=w), _num(d, "c", where=w))
    raise ConfigError(f"unknown fitness.kind {kind!r}")


def build_allee(d: dict):
    kind = d.get("kind", "none")
    w = "allee."
    if kind == "none":
        return NoAllee()
    if kind == "polynomial_bump":
        return PolynomialBump(_num(d, "A", where=w), _num(d, "eps", where=w))
    if kind == "smoothed_triangle":
        delta = d.get("delta")
        return SmoothedTriangle(_num(d, "r", where=w), _num(d, "eps", where=w),
                                None if delta is None else float(delta))
    if kind == "exp":
        return ExpAllee(_num(d, "r_max", where=w))
    raise ConfigError(f"unknown allee.kind {kind!r}")


def build_initial(d: dict):
    if not d:
        return None
    kind = d.get("kind", "rectangle")
    w = "initial."
    if kind == "rectangle":
        return Rectangle(_num(d, "H", where=w), _num(d, "L", where=w))
    if kind == "scaled_plateau":
        return ScaledPlateau(_num(d, "amplitude", where=w), _num(d, "sigma", where=w))
    raise ConfigError(f"unknown initial.kind {kind!r}")


def build_model(cfg: dict) -> ModelSpec:
    return ModelSpec(build_fitness(section(cfg, "fitness")), build_allee(section(cfg, "allee")),
                     build_initial(section(cfg, "initial")))


def build_grid(cfg: dict) -> Grid:
    d = section(cfg, "grid")
    return Grid(_num(d, "theta_min", -40.0), _num(d, "theta_max", 40.0), int(d.get("n", 801)))


def build_sim(cfg: dict) -> SimConfig:
    d = section(cfg, "sim")
    dflt = SimConfig()
    try:
        return SimConfig(
            grid=build_grid(cfg),
            t_end=_num(d, "t_end", dflt.t_end, "sim."),
            rtol=_num(d, "rtol", dflt.rtol, "sim."),
            atol=_num(d, "atol", dflt.atol, "sim."),
            dt_init=_num(d, "dt_init", dflt.dt_init, "sim."),
            dt_max=_num(d, "dt_max", dflt.dt_max, "sim."),
            sample_every=_num(d, "sample_every", dflt.sample_every, "sim."),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

"""Numerical laboratory for a nonlocal bistable reaction-diffusion model."""

__version__ = "0.1.0"

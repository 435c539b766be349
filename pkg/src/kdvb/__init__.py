"""Pseudospectral laboratory for the KdV equation with fractional dissipation,

    u_t + u_xxx + epsilon |d_x|^(2 alpha) u + (u^2)_x = 0,

on a periodic box: an exact-semigroup solver, energy-ledger and
modulation-norm diagnostics, the smoothed-energy multiplier calculus
with sampled pointwise-bound checks, bilinear-estimate sharpness probes,
and inviscid-limit experiments.
"""

__version__ = "0.1.0"

from .propagator import ModelParams
from .spectral import GridSpec, RealField, SpectralField

__all__ = ["GridSpec", "RealField", "SpectralField", "ModelParams", "__version__"]

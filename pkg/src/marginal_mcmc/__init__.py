"""MCMC on marginal posteriors of conjugate hierarchical models.

Latent variables are integrated out analytically, leaving a low-dimensional
target whose evaluation cost depends on fixed-size sufficient statistics
rather than on the number of observations.
"""
from .core import Chain, TargetDensity, make_rng
from .diagnostics import diagnose, iact
from .models import MODELS

__all__ = ["Chain", "TargetDensity", "make_rng", "diagnose", "iact", "MODELS"]
__version__ = "0.1.0"

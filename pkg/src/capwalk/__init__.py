"""Capacity estimates for Brownian hitting probabilities, with Monte Carlo checks.

Subpackages: ``geometry`` (manifolds, points, sets), ``kernels`` (heat-kernel
and Green bounds), ``capacity`` (equilibrium measures), ``stochastics``
(Brownian simulation) and ``harness`` (experiments, reports, CLI).
"""

from . import capacity, geometry, kernels, stochastics
from .errors import ConfigError, GeometryDomainError, PreconditionError, UnsupportedGeometryError

__all__ = [
    "ConfigError",
    "GeometryDomainError",
    "PreconditionError",
    "UnsupportedGeometryError",
    "capacity",
    "geometry",
    "kernels",
    "stochastics",
]

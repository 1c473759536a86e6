"""Capacities of target sets over a resolution ladder."""

import numpy as np

from .. import defaults, geometry
from ..errors import GeometryDomainError
from ..kernels import KernelChoice
from .discretize import half_nn_radii, set_points
from .solver import PatchMeasure, equilibrium_measure


def make_kernel(tag, n, x0=None):
    if tag == "newtonian":
        return KernelChoice.newtonian(n)
    if tag == "martin":
        if x0 is None:
            raise GeometryDomainError("the Martin kernel needs a base point")
        return KernelChoice.martin(x0, n)
    raise GeometryDomainError(f"unknown kernel {tag!r}")


def discretize(m, s, count, interior_fraction=None):
    """Uniform ``PatchMeasure`` on a quasi-uniform discretization of ``s``."""
    if interior_fraction is None:
        interior_fraction = defaults.load()["capacity"]["interior_fraction"]
    pts = set_points(m, s, count, interior_fraction)
    return PatchMeasure.uniform(pts, half_nn_radii(pts))


def _richardson(levels, n):
    """Extrapolate the last two levels assuming error proportional to the point spacing."""
    if len(levels) < 2:
        return levels[-1][1]
    (n_c, c_c), (n_f, c_f) = levels[-2], levels[-1]
    ratio = (n_f / n_c) ** (1.0 / (n - 1))
    return c_f + (c_f - c_c) / (ratio - 1.0)


def capacity_of_set(m, s, x0=None, kernel="newtonian", ladder=None, tol=None, max_iters=None):
    """Capacity of ``s`` on the finest level of a discretization ladder.

    The result's diagnostics hold every level's capacity, the last two levels
    and a Richardson extrapolation that assumes first-order convergence in
    the point spacing.
    """
    if ladder is None:
        ladder = defaults.load()["capacity"]["ladder"]
    ladder = sorted(int(c) for c in ladder)
    n = m.dim
    if x0 is not None and not isinstance(x0, geometry.Point):
        x0 = geometry.Point(m, x0)
    choice = make_kernel(kernel, n, None if x0 is None else x0.coords)
    levels = []
    result = None
    for count in ladder:
        mu = discretize(m, s, count)
        result = equilibrium_measure(mu, choice, tol=tol, max_iters=max_iters)
        levels.append((len(mu), result.capacity))
    result.diagnostics.update(
        {
            "levels": [{"points": c, "capacity": v} for c, v in levels],
            "last_two": [v for _, v in levels[-2:]],
            "richardson": _richardson(levels, n),
        }
    )
    return result


def distance_range(m, s, x0):
    """Smallest and largest distance from ``x0`` to a Euclidean set."""
    if not m.is_flat:
        raise GeometryDomainError("distance ranges are computed on Euclidean space")
    x = np.asarray(x0.coords if isinstance(x0, geometry.Point) else x0, float)
    if isinstance(s, geometry.FiniteUnion):
        parts = [distance_range(m, member, x) for member in s.members]
        return min(p[0] for p in parts), max(p[1] for p in parts)
    if isinstance(s, (geometry.Ball, geometry.SphereShell)):
        d = float(np.linalg.norm(x - np.asarray(s.center, float)))
        lo = max(0.0, d - s.radius) if isinstance(s, geometry.Ball) else abs(d - s.radius)
        return lo, d + s.radius
    if isinstance(s, geometry.Annulus):
        d = float(np.linalg.norm(x - np.asarray(s.center, float)))
        return max(0.0, s.r_in - d, d - s.r_out), d + s.r_out
    raise GeometryDomainError(f"no distance range for {s!r}")

"""Quasi-uniform point sets for capacity computations.

Spheres use an equal-area construction: the polar coordinate is stratified
exactly and the remaining angles follow a Kronecker (R_d) sequence, mapped
through the inverse CDF of the spherical volume element. On S^2 this is the
Fibonacci lattice. For n >= 4 a few deterministic rounds of short-range
repulsion even out the spacing. Solid bodies put most points on their
boundary and sprinkle the rest inside.
"""

import functools
import math

import numpy as np
from scipy.spatial import cKDTree

from .. import geometry
from ..errors import GeometryDomainError, UnsupportedGeometryError


def _kronecker_alpha(d):
    # generalised golden ratio: the real root of x^(d+1) = x + 1
    phi = 2.0
    for _ in range(80):
        phi = (1.0 + phi) ** (1.0 / (d + 1))
    return np.array([phi ** -(k + 1) for k in range(d)]) % 1.0


@functools.lru_cache(maxsize=32)
def _angle_icdf_table(power, size=8193):
    grid = np.linspace(0.0, math.pi, size)
    dens = np.sin(grid) ** power
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]))])
    return grid, cdf / cdf[-1]


def _repel(x, iters, neighbours):
    """Deterministic short-range Riesz repulsion on the unit sphere."""
    n = x.shape[1]
    s = n - 2
    k = min(neighbours, len(x) - 1)
    for _ in range(iters):
        dist, idx = cKDTree(x).query(x, k=k + 1)
        dist, idx = dist[:, 1:], idx[:, 1:]
        diff = x[:, None, :] - x[idx]
        force = (diff / dist[..., None] ** (s + 2)).sum(axis=1)
        force -= (force * x).sum(axis=1)[:, None] * x
        norm = np.linalg.norm(force, axis=1).mean()
        h = np.median(dist[:, 0])
        x = x + 0.1 * h * force / max(norm, 1e-300)
        x /= np.linalg.norm(x, axis=1)[:, None]
    return x


@functools.lru_cache(maxsize=64)
def _sphere_points_cached(n, count, relax_iters):
    m = n - 1
    u = np.empty((count, m))
    u[:, 0] = (np.arange(count) + 0.5) / count
    if m > 1:
        u[:, 1:] = (np.arange(count)[:, None] * _kronecker_alpha(m - 1)[None, :] + 0.5) % 1.0
    ang = np.empty((count, m))
    for k in range(m - 1):
        grid, cdf = _angle_icdf_table(m - 1 - k)
        ang[:, k] = np.interp(u[:, k], cdf, grid)
    ang[:, m - 1] = 2.0 * math.pi * u[:, m - 1]
    x = np.ones((count, n))
    s = np.ones(count)
    for k in range(m):
        x[:, k] = s * np.cos(ang[:, k])
        s = s * np.sin(ang[:, k])
    x[:, m] = s
    if relax_iters and count > 2:
        x = _repel(x, relax_iters, 4 * n)
    x.setflags(write=False)
    return x


def sphere_points(n, count, relax_iters=None):
    """``count`` quasi-uniform points on the unit sphere of R^n."""
    if n < 2 or count < 1:
        raise GeometryDomainError("need n >= 2 and count >= 1")
    if relax_iters is None:
        relax_iters = 0 if n <= 3 else 30
    return np.array(_sphere_points_cached(int(n), int(count), int(relax_iters)))


def half_nn_radii(points):
    """Half the nearest-neighbour distance of each point."""
    if len(points) == 1:
        return np.array([1.0])
    dist, _ = cKDTree(points).query(points, k=2)
    return 0.5 * dist[:, 1]


def _interior_points(n, count, radius):
    """Stratified radii (uniform in volume) along quasi-uniform directions."""
    dirs = sphere_points(n, count)
    # decorrelate radius and direction with a golden-ratio permutation
    order = np.argsort((np.arange(count) * 0.6180339887498949) % 1.0)
    radii = radius * ((np.arange(count) + 0.5) / count) ** (1.0 / n)
    return dirs[order] * radii[:, None]


def _sphere(n, center, radius, count):
    return np.asarray(center, float) + radius * sphere_points(n, count)


def _ball(n, center, radius, count, interior_fraction):
    n_in = int(round(interior_fraction * count))
    n_bd = count - n_in
    bd = _sphere(n, center, radius, n_bd)
    if n_in == 0:
        return bd
    # keep the sprinkle one boundary spacing below the surface
    spacing = radius * (n * geometry.unit_ball_volume(n) / n_bd) ** (1.0 / (n - 1))
    inner = max(radius - spacing, 0.5 * radius)
    return np.vstack([bd, np.asarray(center, float) + _interior_points(n, n_in, inner)])


def _annulus(n, center, r_in, r_out, count, interior_fraction):
    n_in = int(round(interior_fraction * count))
    n_bd = count - n_in
    if r_in == 0:
        return _ball(n, center, r_out, count, interior_fraction)
    share = r_in ** (n - 1) / (r_in ** (n - 1) + r_out ** (n - 1))
    k_in = max(1, int(round(share * n_bd)))
    parts = [_sphere(n, center, r_out, n_bd - k_in), _sphere(n, center, r_in, k_in)]
    if n_in:
        dirs = sphere_points(n, n_in)
        order = np.argsort((np.arange(n_in) * 0.6180339887498949) % 1.0)
        mid = 0.5 * (r_in + r_out)
        half = 0.5 * (r_out - r_in) * 0.8
        lo, hi = (mid - half) ** n, (mid + half) ** n
        radii = (lo + (hi - lo) * (np.arange(n_in) + 0.5) / n_in) ** (1.0 / n)
        parts.append(np.asarray(center, float) + dirs[order] * radii[:, None])
    return np.vstack(parts)


def _surface_weight(s, n):
    if isinstance(s, (geometry.Ball, geometry.SphereShell)):
        return s.radius ** (n - 1)
    if isinstance(s, geometry.Annulus):
        return s.r_out ** (n - 1) + s.r_in ** (n - 1)
    if isinstance(s, geometry.FiniteUnion):
        return sum(_surface_weight(member, n) for member in s.members)
    raise UnsupportedGeometryError(f"cannot discretize {s!r}")


def set_points(m, s, count, interior_fraction=0.1):
    """Quasi-uniform support points for a Euclidean set."""
    if not m.is_flat:
        raise UnsupportedGeometryError("capacity discretizations are only available on Euclidean space")
    geometry._check_set(s)
    n = m.dim
    if isinstance(s, geometry.SphereShell):
        return _sphere(n, s.center, s.radius, count)
    if isinstance(s, geometry.Ball):
        return _ball(n, s.center, s.radius, count, interior_fraction)
    if isinstance(s, geometry.Annulus):
        return _annulus(n, s.center, s.r_in, s.r_out, count, interior_fraction)
    if isinstance(s, geometry.FiniteUnion):
        weights = np.array([_surface_weight(member, n) for member in s.members])
        counts = np.maximum(1, np.round(count * weights / weights.sum()).astype(int))
        return np.vstack([set_points(m, member, int(c), interior_fraction) for member, c in zip(s.members, counts)])
    raise UnsupportedGeometryError(f"cannot discretize {s!r}")


def segment_points(count, length=1.0):
    """Midpoints of ``count`` equal cells of [0, length], embedded as a column."""
    x = (np.arange(count) + 0.5) * length / count
    return x[:, None]

"""Capacity comparison inequalities and the volume checks that feed them."""

import math

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .. import geometry
from ..errors import GeometryDomainError, UnsupportedGeometryError
from ..kernels import INF


def martin_newtonian_sandwich(cap_newton, dmin, dmax, n):
    """Interval [Cap_N / dmax^(n-2), Cap_N / dmin^(n-2)] containing Cap_K.

    ``dmin`` and ``dmax`` are the smallest and largest distances from the
    base point to the set. ``dmin = 0`` gives an infinite upper end.
    """
    if dmin < 0 or dmax < dmin or dmax <= 0:
        raise GeometryDomainError("need 0 <= dmin <= dmax and dmax > 0")
    lo = cap_newton / dmax ** (n - 2)
    hi = INF if dmin == 0 else cap_newton / dmin ** (n - 2)
    return lo, hi


def ball_capacity_upper(eps, n):
    """Single-set cover bound (2 eps)^(n-2) on the Newtonian capacity of an eps-ball."""
    if not eps > 0:
        raise GeometryDomainError("eps must be positive")
    return (2.0 * eps) ** (n - 2)


def patch_self_energy(k, alpha, delta):
    """E |X - Y|^(-alpha) for X, Y independent and uniform on a k-ball of radius delta.

    Finite for alpha < k. Uses the distance density of two uniform points in
    a ball, integrated against t^(-alpha) in closed form.
    """
    if not 0 < alpha < k:
        raise GeometryDomainError("self energy needs 0 < alpha < patch dimension")
    s = -alpha
    num = k / (k + s) * 2.0 ** (k + s) * special.beta((k + s + 1) / 2, (k + 1) / 2)
    return num / special.beta((k + 1) / 2, 0.5) * delta**s


def hausdorff_energy_lower_bound(mu, alpha, eps, mass=1.0):
    """Lower bound mass^2 / sum_{d <= eps} d^(-alpha) dmu dmu for the eps-Hausdorff content.

    Off-diagonal pairs use point distances; each diagonal term uses the exact
    self-energy of a uniform patch of the atom's radius and dimension.
    """
    if not (alpha > 0 and eps > 0):
        raise GeometryDomainError("alpha and eps must be positive")
    x, w, radii = mu.support, mu.weights * mass, mu.patch_radii
    tree = cKDTree(x)
    pairs = tree.query_pairs(eps, output_type="ndarray")
    denom = 0.0
    if len(pairs):
        d = np.linalg.norm(x[pairs[:, 0]] - x[pairs[:, 1]], axis=1)
        keep = d > 0
        denom += 2.0 * float(np.sum(w[pairs[keep, 0]] * w[pairs[keep, 1]] * d[keep] ** (-alpha)))
    self_terms = np.array([patch_self_energy(mu.patch_dim, alpha, r) for r in radii])
    denom += float(np.sum(w * w * self_terms))
    return mass * mass / denom, denom


def greedy_cover_value(mu, alpha, eps):
    """sum diam(U)^alpha for a greedy cover of the patches by balls of diameter <= eps.

    Each patch is a ball of its patch radius around its atom; a cover ball of
    radius eps/2 centred at an uncovered atom takes every patch it fully
    contains. Patches larger than eps/2 get their own ball of diameter
    2 * radius, which is only legitimate when that is <= eps.
    """
    x, radii = mu.support, mu.patch_radii
    if np.any(2 * radii > eps):
        raise GeometryDomainError("patches larger than the cover scale")
    half = 0.5 * eps
    tree = cKDTree(x)
    covered = np.zeros(len(x), bool)
    total = 0.0
    for i in range(len(x)):
        if covered[i]:
            continue
        near = np.asarray(tree.query_ball_point(x[i], half), int)
        inside = near[np.linalg.norm(x[near] - x[i], axis=1) + radii[near] <= half]
        inside = np.union1d(inside, [i])
        covered[inside] = True
        total += eps**alpha
    return total


def dyadic_radii(dmin, dmax):
    """r_i = 2^i dmin for i = 0 .. I with r_I the first radius >= dmax."""
    if not dmin > 0:
        raise GeometryDomainError("the base point must lie at positive distance from the set")
    radii = [dmin]
    while radii[-1] < dmax:
        radii.append(2.0 * radii[-1])
    if len(radii) == 1:
        radii.append(2.0 * dmin)
    return np.array(radii)


def annuli_capacity_upper(dmin, dmax, n, piece_capacities):
    """Dyadic bound sum_i Cap_N(A cap B(x0, r_i)) / r_(i-1)^(n-2) on Cap_K(A).

    ``piece_capacities[i-1]`` is the Newtonian capacity of the part of A
    inside B(x0, r_i), for i = 1 .. I as returned by ``dyadic_radii``.
    """
    radii = dyadic_radii(dmin, dmax)
    caps = np.asarray(piece_capacities, float)
    if len(caps) != len(radii) - 1:
        raise GeometryDomainError(f"expected {len(radii) - 1} piece capacities, got {len(caps)}")
    return float(np.sum(caps / radii[:-1] ** (n - 2)))


def dyadic_singular_set_bound(eps, d, n, volume_constant=1.0, levels=None):
    """Dyadic sum for an eps-neighbourhood of a codimension-4 singular set.

    With Vol(N_2eps(S) cap B(r)) <= C eps^4 r^(n-4), covering by eps-balls gives
    Cap_N(piece_i) <= C eps^2 r_i^(n-4), so the sum is
    C eps^2 sum_i r_i^(n-4) / r_(i-1)^(n-2) = C (eps/d)^2 2^(n-2) (1 - 4^-levels) / 3.
    ``levels=None`` sums the full geometric series.
    """
    if not (eps > 0 and d > 0):
        raise GeometryDomainError("eps and d must be positive")
    tail = 1.0 if levels is None else 1.0 - 4.0 ** (-levels)
    return volume_constant * (eps / d) ** 2 * 2.0 ** (n - 2) * tail / 3.0


# --- Jiang-Naber volume check on the Eguchi-Hanson product -----------------------


def _tube_slice_quad(a, k, rho_tube, R):
    """Volume of {rho <= rho_tube, rho^2 + |z|^2 <= R^2} by 1-D quadrature in r."""
    top = min(rho_tube, R)
    if top <= 0:
        return 0.0
    r_top = geometry.radius_from_arclength(top, a)

    def integrand(s):
        rho = geometry.radial_arclength(s, a)
        return math.pi**2 * s**3 * geometry.unit_ball_volume(k) * max(R * R - rho * rho, 0.0) ** (k / 2)

    return integrate.quad(integrand, a, r_top, epsabs=0.0, epsrel=1e-11, limit=200)[0]


def jiang_naber_volume_check(m, eps, radii, samples=400_000, seed=0, level=0.99):
    """Table of Vol(N_2eps(S_eps) cap B(x0, r)) / (eps^4 r^(n-4)) for x0 on the bolt.

    S_eps is the bolt sublevel set {r <= r*(eps)} times the flat factor, so its
    2 eps neighbourhood is {rho <= rho(r*) + 2 eps}. The ball about a bolt
    point is replaced by the radially symmetric outer set
    {rho^2 + |z|^2 <= r^2}, which contains it; the reported volumes are
    therefore upper values, which is the direction the check needs. Each row
    carries the Monte Carlo estimate, its interval and a quadrature value.
    """
    if m.is_flat:
        raise UnsupportedGeometryError("the volume check runs on the Eguchi-Hanson product")
    a, k, n = m.bolt_scale, m.flat_dim, m.dim
    r_star = geometry.bolt_sublevel_for_epsilon(a, eps)
    rho_tube = geometry.radial_arclength(r_star, a) + 2.0 * eps
    rows = []
    for i, R in enumerate(radii):
        top = min(rho_tube, R)
        r_max = geometry.radius_from_arclength(top, a)

        def region(rr, zn, R=R):
            rho = geometry.radial_arclength(rr, a)
            return (rho <= rho_tube) & (rho * rho + zn * zn <= R * R)

        est = geometry.eh_radial_volume_mc(a, k, region, r_max, R, samples, seed + i, level)
        scale = eps**4 * R ** (n - 4)
        rows.append(
            {
                "eps": eps,
                "r": R,
                "r_star": r_star,
                "tube_radius": rho_tube,
                "volume": est.value,
                "volume_ci": [est.ci_low, est.ci_high],
                "volume_quadrature": _tube_slice_quad(a, k, rho_tube, R),
                "ratio": est.value / scale,
                "ratio_ci": [est.ci_low / scale, est.ci_high / scale],
            }
        )
    return rows

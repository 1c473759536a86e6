"""Model manifolds, their metric data, distances and volumes.

Two geometries are supported: flat Euclidean n-space and the product of the
Eguchi-Hanson space with a Euclidean factor. The Eguchi-Hanson chart is
(r, theta, phi, psi) with r >= a, followed by n-4 Cartesian coordinates.
Its angular part is the Z2 quotient of the three-sphere, so psi has period
2 pi and the volume form is r^3 sin(theta) / 8.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special, stats

from .errors import GeometryDomainError, UnsupportedGeometryError

EUCLIDEAN = "euclidean"
EH_PRODUCT = "eh-product"

# Kretschmann scalar of the Eguchi-Hanson metric is 384 a^8 / r^12, so
# |Rm| = sqrt(384) a^4 / r^6.
CURVATURE_CONSTANT = math.sqrt(384.0)

MEMBERSHIP_RTOL = 1e-12


def unit_ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str
    dim: int
    bolt_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, EH_PRODUCT):
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 3:
            raise GeometryDomainError("dimension must be an integer >= 3")
        if self.kind == EH_PRODUCT:
            if self.dim < 4:
                raise GeometryDomainError("Eguchi-Hanson product needs dim >= 4")
            if not self.bolt_scale > 0:
                raise GeometryDomainError("bolt_scale must be positive")

    @classmethod
    def euclidean(cls, n):
        return cls(EUCLIDEAN, int(n))

    @classmethod
    def eguchi_hanson(cls, n, a):
        return cls(EH_PRODUCT, int(n), float(a))

    @property
    def is_flat(self):
        return self.kind == EUCLIDEAN

    @property
    def flat_dim(self):
        """Dimension of the Euclidean factor (all of it for flat space)."""
        return self.dim if self.is_flat else self.dim - 4


@dataclass(frozen=True)
class Point:
    manifold: ManifoldSpec
    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in np.ravel(self.coords))
        object.__setattr__(self, "coords", coords)
        if len(coords) != self.manifold.dim:
            raise GeometryDomainError(
                f"expected {self.manifold.dim} coordinates, got {len(coords)}"
            )
        if not all(math.isfinite(c) for c in coords):
            raise GeometryDomainError("coordinates must be finite")
        if not self.manifold.is_flat:
            a = self.manifold.bolt_scale
            if coords[0] < a * (1 - MEMBERSHIP_RTOL):
                raise GeometryDomainError(f"radial coordinate {coords[0]} < bolt scale {a}")

    @property
    def array(self):
        return np.array(self.coords)

    @property
    def radius(self):
        """Eguchi-Hanson radial coordinate."""
        return self.coords[0]

    @property
    def angles(self):
        return self.coords[1:4]

    @property
    def flat(self):
        """Coordinates in the Euclidean factor."""
        return np.array(self.coords[-self.manifold.flat_dim:]) if self.manifold.flat_dim else np.zeros(0)


def point(m, coords):
    return Point(m, tuple(coords))


# --- sets ------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center: Tuple[float, ...]
    radius: float


@dataclass(frozen=True)
class SphereShell:
    center: Tuple[float, ...]
    radius: float


@dataclass(frozen=True)
class Annulus:
    center: Tuple[float, ...]
    r_in: float
    r_out: float


@dataclass(frozen=True)
class FiniteUnion:
    members: Tuple[object, ...]


@dataclass(frozen=True)
class BoltSublevel:
    """{r <= r_star} on the Eguchi-Hanson factor, times the whole flat factor."""

    r_star: float


@dataclass(frozen=True)
class Slab:
    """Closed ball of the Euclidean factor; half_width may be math.inf."""

    center: Tuple[float, ...]
    half_width: float


@dataclass(frozen=True)
class Product:
    """Product of a set in the leading coordinates with a slab in the Euclidean factor."""

    base: object
    slab: Slab


def _check_set(s):
    if isinstance(s, (Ball, SphereShell)):
        if not s.radius > 0:
            raise GeometryDomainError("radius must be positive")
    elif isinstance(s, Annulus):
        if not 0 <= s.r_in < s.r_out:
            raise GeometryDomainError("annulus needs 0 <= r_in < r_out")
    elif isinstance(s, FiniteUnion):
        if not s.members:
            raise GeometryDomainError("empty union")
        for member in s.members:
            _check_set(member)
    elif isinstance(s, BoltSublevel):
        if not s.r_star > 0:
            raise GeometryDomainError("r_star must be positive")
    elif isinstance(s, Product):
        _check_set(s.base)
        if not s.slab.half_width >= 0:
            raise GeometryDomainError("slab half width must be >= 0")
    else:
        raise TypeError(f"unknown set type: {s!r}")


def set_scale(s):
    """Characteristic length of a set, used for the membership tolerance."""
    if isinstance(s, (Ball, SphereShell)):
        return s.radius
    if isinstance(s, Annulus):
        return s.r_out
    if isinstance(s, FiniteUnion):
        return max(set_scale(member) for member in s.members)
    if isinstance(s, BoltSublevel):
        return s.r_star
    if isinstance(s, Product):
        return set_scale(s.base)
    raise TypeError(f"unknown set type: {s!r}")


# --- Eguchi-Hanson radial profile --------------------------------------------


def eh_f(r, a):
    """Warping function 1 - (a/r)^4."""
    return 1.0 - (a / np.asarray(r, dtype=float)) ** 4


def radial_arclength(r, a):
    """Radial distance from the bolt, int_a^r (1 - (a/s)^4)^(-1/2) ds.

    Evaluated in closed form through incomplete elliptic integrals with
    parameter 1/2; accepts arrays.
    """
    x = np.asarray(r, dtype=float) / a
    if np.any(x < 1 - MEMBERSHIP_RTOL):
        raise GeometryDomainError("radial coordinate below the bolt")
    x = np.maximum(x, 1.0)
    phi = np.arccos(1.0 / x)
    val = np.sqrt(x**4 - 1.0) / x + (special.ellipkinc(phi, 0.5) - 2.0 * special.ellipeinc(phi, 0.5)) / math.sqrt(2.0)
    val = a * np.maximum(val, 0.0)
    return float(val) if np.ndim(val) == 0 else val


def radius_from_arclength(rho, a):
    """Inverse of ``radial_arclength`` (Newton iteration on arrays)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise GeometryDomainError("arc length must be >= 0")
    # start from the large-r asymptote r ~ rho + 0.6 a and the small-rho series
    r = np.maximum(a + rho**2 / (2.0 * a), rho + 0.6 * a)
    r = np.where(rho < 0.5 * a, a + rho**2 / (2.0 * a), r)
    for _ in range(60):
        g = radial_arclength(r, a) - rho
        step = g * np.sqrt(eh_f(r, a))
        r_new = np.maximum(r - step, a + 0.5 * (r - a))
        if np.all(np.abs(r_new - r) <= 1e-15 * r):
            r = r_new
            break
        r = r_new
    return float(r) if np.ndim(r) == 0 else r


def bolt_sublevel_for_epsilon(a, eps):
    """Radial threshold r* with {r <= r*} matching the eps-singular set.

    The curvature scale is |Rm|^(-1/2) with |Rm| = c a^4 / r^6, so the region
    where the curvature scale is at most eps is r <= (c a^4 eps^2)^(1/6),
    clamped below at the bolt. The regularity scale is capped at 1, which is
    why eps must lie in (0, 1].
    """
    if not eps > 0:
        raise GeometryDomainError("eps must be positive")
    if eps > 1:
        raise GeometryDomainError("eps must be <= 1 (the regularity scale is capped at 1)")
    if not a > 0:
        raise GeometryDomainError("bolt scale must be positive")
    return max(a, (CURVATURE_CONSTANT * a**4 * eps**2) ** (1.0 / 6.0))


def eh_curvature_norm(r, a):
    """Pointwise norm of the Riemann tensor of the Eguchi-Hanson metric."""
    return CURVATURE_CONSTANT * a**4 / np.asarray(r, dtype=float) ** 6


# --- metric and drift --------------------------------------------------------


def _require(m, p):
    if p.manifold != m:
        raise GeometryDomainError("point belongs to a different manifold")


def metric_at(m, p):
    """Chart metric g_ij at ``p``."""
    _require(m, p)
    g = np.eye(m.dim)
    if m.is_flat:
        return g
    r, theta = p.coords[0], p.coords[1]
    a = m.bolt_scale
    if r <= a:
        raise GeometryDomainError("the chart metric is degenerate on the bolt (r <= a)")
    f = 1.0 - (a / r) ** 4
    q = r * r / 4.0
    s, c = math.sin(theta), math.cos(theta)
    g[0, 0] = 1.0 / f
    g[1, 1] = q
    g[2, 2] = q * (s * s + f * c * c)
    g[2, 3] = g[3, 2] = q * f * c
    g[3, 3] = q * f
    return g


def laplace_drift(m, p):
    """Drift b^i = |g|^(-1/2) d_j(|g|^(1/2) g^ij) of the generator-Laplacian diffusion."""
    _require(m, p)
    b = np.zeros(m.dim)
    if m.is_flat:
        return b
    r, theta = p.coords[0], p.coords[1]
    a = m.bolt_scale
    if r <= a:
        raise GeometryDomainError("the chart drift is singular on the bolt (r <= a)")
    b[0] = 3.0 / r + a**4 / r**5
    b[1] = 4.0 / (math.tan(theta) * r * r)
    return b


def radial_drift(r, a):
    """Drift of the radial coordinate under the Eguchi-Hanson Laplacian."""
    r = np.asarray(r, dtype=float)
    return 3.0 / r + a**4 / r**5


# --- Cartesian chart of the Eguchi-Hanson factor ------------------------------


def eh_to_cartesian(r, theta, phi, psi):
    """Map chart coordinates to R^4 (modulo x -> -x)."""
    h1, h2 = 0.5 * (psi + phi), 0.5 * (psi - phi)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([r * c * math.cos(h1), r * c * math.sin(h1), r * s * math.cos(h2), r * s * math.sin(h2)])


def cartesian_to_eh(x):
    """Inverse of ``eh_to_cartesian``; angles are returned in canonical ranges."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    rc, rs = math.hypot(x[0], x[1]), math.hypot(x[2], x[3])
    theta = 2.0 * math.atan2(rs, rc)
    h1, h2 = math.atan2(x[1], x[0]), math.atan2(x[3], x[2])
    phi, psi = h1 - h2, h1 + h2
    return r, theta, phi % (2 * math.pi), psi % (2 * math.pi)


def eh_cartesian_metric(x, a):
    """Eguchi-Hanson metric in the Cartesian chart (unit determinant)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    f = 1.0 - (a / r) ** 4
    xh = x / r
    vh = np.array([-x[1], x[0], -x[3], x[2]]) / r
    return np.eye(4) + (1.0 / f - 1.0) * np.outer(xh, xh) + (f - 1.0) * np.outer(vh, vh)


# --- distances ---------------------------------------------------------------

_TWO_PI = 2.0 * math.pi


def _same_angle(u, v, tol):
    d = (u - v) % _TWO_PI
    return min(d, _TWO_PI - d) <= tol


def _radially_reducible(m, p, q):
    a = m.bolt_scale
    tol = 1e-12
    on_bolt = p.radius <= a * (1 + MEMBERSHIP_RTOL) or q.radius <= a * (1 + MEMBERSHIP_RTOL)
    if abs(p.coords[1] - q.coords[1]) > tol or not _same_angle(p.coords[2], q.coords[2], tol):
        return False
    return on_bolt or _same_angle(p.coords[3], q.coords[3], tol)


def distance(m, p, q):
    """Riemannian distance for the pairs the model geometries answer exactly."""
    _require(m, p)
    _require(m, q)
    if m.is_flat:
        return float(np.linalg.norm(p.array - q.array))
    if not _radially_reducible(m, p, q):
        raise UnsupportedGeometryError(
            "Eguchi-Hanson distance is only available for points on a common radial geodesic"
        )
    a = m.bolt_scale
    radial = abs(radial_arclength(p.radius, a) - radial_arclength(q.radius, a))
    dz = p.flat - q.flat
    return float(math.hypot(radial, float(np.linalg.norm(dz))))


def _center_point(m, center):
    return Point(m, tuple(center))


def distance_to(m, s, p):
    """Distance from ``p`` to the set ``s`` (zero on the set)."""
    _require(m, p)
    _check_set(s)
    if isinstance(s, FiniteUnion):
        return min(distance_to(m, member, p) for member in s.members)
    if isinstance(s, Product):
        k = m.flat_dim
        if len(s.slab.center) != k:
            raise GeometryDomainError("slab center must live in the Euclidean factor")
        base_coords = p.coords[: m.dim - k]
        dz = float(np.linalg.norm(np.array(p.coords[m.dim - k:]) - np.array(s.slab.center))) if k else 0.0
        slab_gap = max(0.0, dz - s.slab.half_width)
        base = _base_distance(m, s.base, base_coords, p)
        return math.hypot(base, slab_gap)
    if isinstance(s, BoltSublevel):
        if m.is_flat:
            raise GeometryDomainError("bolt sublevel sets live on the Eguchi-Hanson factor")
        a = m.bolt_scale
        r_star = max(s.r_star, a)
        if p.radius <= r_star:
            return 0.0
        return float(radial_arclength(p.radius, a) - radial_arclength(r_star, a))
    d = distance(m, p, _center_point(m, s.center))
    if isinstance(s, Ball):
        return max(0.0, d - s.radius)
    if isinstance(s, SphereShell):
        return abs(d - s.radius)
    if isinstance(s, Annulus):
        return max(0.0, s.r_in - d, d - s.r_out)
    raise TypeError(f"unknown set type: {s!r}")


def _base_distance(m, base, base_coords, p):
    if isinstance(base, BoltSublevel):
        return distance_to(m, base, p)
    if not m.is_flat:
        raise UnsupportedGeometryError("product bases on Eguchi-Hanson must be bolt sublevel sets")
    # flat product: the base set lives in the leading coordinates
    sub = ManifoldSpec.euclidean(max(3, len(base_coords)))
    if len(base_coords) < 3:
        raise UnsupportedGeometryError("flat product bases need at least 3 leading coordinates")
    return distance_to(sub, base, Point(sub, base_coords))


def contains(m, s, p):
    """Membership up to the tolerance 1e-12 times the set's scale."""
    return distance_to(m, s, p) <= MEMBERSHIP_RTOL * set_scale(s)


# --- volumes -----------------------------------------------------------------


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    ci_low: float
    ci_high: float
    method: str
    samples: int = 0


def _cp(hits, n, level):
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else stats.beta.ppf(alpha / 2, hits, n - hits + 1)
    hi = 1.0 if hits == n else stats.beta.ppf(1 - alpha / 2, hits + 1, n - hits)
    return float(lo), float(hi)


def eh_radial_volume_mc(a, k, indicator, r_max, z_max, samples, seed, level=0.99):
    """Monte Carlo volume of an Eguchi-Hanson region described in (r, |z|).

    ``indicator(r, znorm)`` selects the region inside {a <= r <= r_max} x
    {|z| <= z_max}; the Euclidean factor has dimension ``k``. The angular
    integral of the volume form is pi^2 r^3, so r is drawn with density
    proportional to r^3 and z uniformly from the k-ball.
    """
    rng = np.random.default_rng(seed)
    u = rng.random(samples)
    r = (a**4 + u * (r_max**4 - a**4)) ** 0.25
    if k:
        g = rng.standard_normal((samples, k))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        zn = z_max * rng.random(samples) ** (1.0 / k)
    else:
        zn = np.zeros(samples)
    hits = int(np.count_nonzero(indicator(r, zn)))
    box = math.pi**2 * (r_max**4 - a**4) / 4.0 * unit_ball_volume(k) * z_max**k if k else math.pi**2 * (r_max**4 - a**4) / 4.0
    lo, hi = _cp(hits, samples, level)
    return VolumeEstimate(box * hits / samples, box * lo, box * hi, "eh-radial-mc", samples)


def region_volume(m, s, samples=200_000, seed=0, level=0.99):
    """Monte Carlo volume of a bounded radially symmetric Eguchi-Hanson region.

    Supported sets: ``BoltSublevel`` (only for the bare Eguchi-Hanson space)
    and ``Product(BoltSublevel, Slab)`` with a finite slab.
    """
    if m.is_flat:
        raise UnsupportedGeometryError("region_volume is for the Eguchi-Hanson product")
    a, k = m.bolt_scale, m.flat_dim
    if isinstance(s, BoltSublevel):
        if k:
            raise UnsupportedGeometryError("a bolt sublevel set has infinite volume when n > 4")
        r_star = max(s.r_star, a)
        return eh_radial_volume_mc(a, 0, lambda r, z: r <= r_star, r_star, 0.0, samples, seed, level)
    if isinstance(s, Product) and isinstance(s.base, BoltSublevel) and math.isfinite(s.slab.half_width):
        r_star = max(s.base.r_star, a)
        w = s.slab.half_width
        if k == 0:
            return eh_radial_volume_mc(a, 0, lambda r, z: r <= r_star, r_star, 0.0, samples, seed, level)
        return eh_radial_volume_mc(a, k, lambda r, z: r <= r_star, r_star, w, samples, seed, level)
    raise UnsupportedGeometryError(f"no radially symmetric volume for {s!r}")


def ball_volume(m, center, r, samples=200_000, seed=0, level=0.99):
    """Volume of the geodesic ball B(center, r), with an interval that contains it.

    Euclidean balls are exact. On the Eguchi-Hanson product two centers are
    supported. A center on the bolt gives a Monte Carlo bracket between the
    radially symmetric sets {rho^2 + |dz|^2 <= r^2} (outer, reported as the
    value) and {(rho + pi a / 2)^2 + |dz|^2 <= r^2} (inner), where rho is the
    radial distance to the bolt and pi a / 2 bounds the bolt's diameter. A
    center far from the bolt gets the deterministic bracket
    omega_n r^n f^(+-2) from the metric eigenvalues f and 1/f of the
    unit-determinant Cartesian chart. Other centers are unsupported.
    """
    _require(m, center)
    if not r > 0:
        raise GeometryDomainError("radius must be positive")
    n = m.dim
    if m.is_flat:
        v = unit_ball_volume(n) * r**n
        return VolumeEstimate(v, v, v, "closed-form")
    a, k = m.bolt_scale, m.flat_dim
    rc = center.radius
    if rc <= a * (1 + MEMBERSHIP_RTOL):
        r_max = radius_from_arclength(r, a)
        shift = math.pi * a / 2.0

        def outer(rr, zn):
            return radial_arclength(rr, a) ** 2 + zn**2 <= r * r

        def inner(rr, zn):
            return (radial_arclength(rr, a) + shift) ** 2 + zn**2 <= r * r

        out = eh_radial_volume_mc(a, k, outer, r_max, r, samples, seed, level)
        inn = eh_radial_volume_mc(a, k, inner, r_max, r, samples, seed + 1, level)
        return VolumeEstimate(out.value, inn.ci_low, out.ci_high, "eh-bolt-bracket", samples)
    # Euclidean-chart reach of the ball is at most r / sqrt(f_lo); iterate
    # f_lo = f(rc - reach) to a fixed point.
    f_lo = eh_f(rc, a)
    for _ in range(100):
        inner_r = rc - r / math.sqrt(f_lo)
        if inner_r <= a:
            raise UnsupportedGeometryError("ball reaches the bolt region; only bolt centers are supported there")
        f_new = float(eh_f(inner_r, a))
        if abs(f_new - f_lo) <= 1e-15:
            break
        f_lo = f_new
    inner_r = rc - r / math.sqrt(f_lo)
    if inner_r <= a or r / math.sqrt(f_lo) >= rc:
        raise UnsupportedGeometryError("ball is not contained in a single sheet of the chart")
    base = unit_ball_volume(n) * r**n
    return VolumeEstimate(base, base * f_lo**2, base / f_lo**2, "eh-metric-bracket")

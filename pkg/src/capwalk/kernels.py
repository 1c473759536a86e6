"""Closed-form kernels, heat-kernel bounds and the constants of the hitting estimate.

All heat kernels use the generator-Laplacian normalisation
(4 pi t)^(-n/2) exp(-d^2 / 4t). Infinite values (kernel diagonal, infinite
time horizon) are represented by ``math.inf`` and every formula branches on
them explicitly instead of letting them flow through arithmetic.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import defaults, geometry
from .errors import GeometryDomainError

INF = math.inf


def is_inf(x):
    return isinstance(x, (int, float)) and math.isinf(x) and x > 0


@dataclass(frozen=True)
class HeatKernelBoundParams:
    n: int
    gamma: float
    C_gamma: float
    v: float
    T: float = INF
    diam: float = 0.0

    def __post_init__(self):
        if self.n < 3:
            raise GeometryDomainError("dimension must be >= 3")
        if not self.gamma >= 4:
            raise GeometryDomainError("gamma must be >= 4")
        if self.gamma == 4 and self.C_gamma != 1:
            raise GeometryDomainError("gamma = 4 is only the sharp flat-space mode with C_gamma = 1")
        if not (self.C_gamma > 0 and self.v > 0 and self.T > 0 and self.diam >= 0):
            raise GeometryDomainError("need C_gamma > 0, v > 0, T > 0, diam >= 0")

    @property
    def euclidean_mode(self):
        return self.gamma == 4


@dataclass(frozen=True)
class KernelChoice:
    tag: str  # "martin" or "newtonian"
    exponent: int
    x0: tuple = None

    def __post_init__(self):
        if self.tag not in ("martin", "newtonian"):
            raise ValueError("kernel tag must be 'martin' or 'newtonian'")
        if self.exponent < 1:
            raise GeometryDomainError("kernel exponent n-2 must be >= 1")
        if self.tag == "martin" and self.x0 is None:
            raise ValueError("the Martin kernel needs a base point")

    @classmethod
    def martin(cls, x0, n):
        return cls("martin", n - 2, tuple(float(c) for c in np.ravel(x0)))

    @classmethod
    def newtonian(cls, n):
        return cls("newtonian", n - 2)


def euclidean_params(n, T=INF, diam=0.0):
    """Sharp flat-space parameters: gamma = 4, C_gamma = 1, v = omega_n."""
    return HeatKernelBoundParams(n, 4.0, 1.0, geometry.unit_ball_volume(n), T, diam)


def conservative_params(n, v=None, T=INF, diam=0.0, gamma=None, safety=None):
    """gamma = 5 with C_gamma calibrated on the flat kernel times a safety factor of 4."""
    preset = defaults.load()["kernels"]["presets"]["conservative"]
    gamma = preset["gamma"] if gamma is None else gamma
    safety = preset["safety"] if safety is None else safety
    v = geometry.unit_ball_volume(n) if v is None else v
    return HeatKernelBoundParams(n, gamma, calibrate_c_gamma(n, gamma, safety), v, T, diam)


def params_from_preset(name, n, **kwargs):
    if name == "euclidean":
        return euclidean_params(n, kwargs.get("T", INF), kwargs.get("diam", 0.0))
    if name == "conservative":
        return conservative_params(n, **kwargs)
    raise ValueError(f"unknown preset {name!r}; choose 'euclidean' or 'conservative'")


# --- pointwise kernels ---------------------------------------------------------


def newtonian_kernel(m, x, y):
    d = geometry.distance(m, x, y)
    if d == 0:
        return INF
    return d ** (2 - m.dim)


def martin_kernel(m, x0, x, y):
    """(d(x0, y) / d(x, y))^(n-2), infinite on the diagonal."""
    d_xy = geometry.distance(m, x, y)
    d_0y = geometry.distance(m, x0, y)
    if d_xy == 0:
        return INF
    return (d_0y / d_xy) ** (m.dim - 2)


def _check_t(t):
    if np.any(np.asarray(t) <= 0):
        raise GeometryDomainError("time must be positive")


def heat_kernel_flat(n, t, d):
    _check_t(t)
    t, d = np.asarray(t, float), np.asarray(d, float)
    out = (4 * math.pi * t) ** (-n / 2) * np.exp(-d * d / (4 * t))
    return out[()] if out.ndim == 0 else out


def cheeger_yau_lower(n, t, d):
    """Lower heat-kernel bound under nonnegative Ricci curvature (the flat kernel)."""
    return heat_kernel_flat(n, t, d)


def li_yau_upper(params, vol_ball, t, d):
    """C_gamma omega_n (4 pi)^(-n/2) / Vol(B(x, sqrt t)) exp(-d^2 / (gamma t))."""
    _check_t(t)
    if np.any(np.asarray(vol_ball) <= 0):
        raise GeometryDomainError("ball volume must be positive")
    n = params.n
    t, d = np.asarray(t, float), np.asarray(d, float)
    out = params.C_gamma * geometry.unit_ball_volume(n) * (4 * math.pi) ** (-n / 2) / np.asarray(vol_ball, float) * np.exp(-d * d / (params.gamma * t))
    return out[()] if out.ndim == 0 else out


# --- constants -----------------------------------------------------------------


def incomplete_gamma_upper(s, x):
    """Upper incomplete gamma integral int_x^inf xi^(s-1) e^(-xi) d xi."""
    if not s > 0:
        raise GeometryDomainError("s must be positive")
    if x < 0:
        raise GeometryDomainError("x must be >= 0")
    if is_inf(x):
        return 0.0
    if x == 0:
        return math.gamma(s)
    return float(special.gammaincc(s, x) * special.gamma(s))


def _gamma_ratio(s, x):
    """Gamma(s) / Gamma(s, x) with the x = 0 (infinite horizon) case exact."""
    if x == 0:
        return 1.0
    q = float(special.gammaincc(s, x))
    if q == 0.0:
        return INF
    return 1.0 / q


def lambda_constant(params):
    """Constant of the two-sided hitting estimate.

    (omega_n / v) (gamma/4)^(n/2-1) C_gamma Gamma(n/2-1) / Gamma(n/2-1, diam^2/4T).
    """
    n = params.n
    if n < 3:
        raise GeometryDomainError("dimension must be >= 3")
    x = 0.0 if is_inf(params.T) else params.diam**2 / (4.0 * params.T)
    ratio = _gamma_ratio(n / 2 - 1, x)
    lead = geometry.unit_ball_volume(n) / params.v
    if params.gamma != 4:
        lead *= (params.gamma / 4.0) ** (n / 2 - 1)
    if params.C_gamma != 1:
        lead *= params.C_gamma
    return lead if ratio == 1.0 else lead * ratio


def noncollapse_v(m, points, T, samples=200_000, seed=0, level=0.99):
    """inf over ``points`` of Vol(B(y, sqrt(2T))) / (2T)^(n/2), with an interval."""
    if is_inf(T) or not T > 0:
        raise GeometryDomainError("T must be finite and positive")
    points = list(points)
    if not points:
        raise GeometryDomainError("need at least one point")
    rad = math.sqrt(2 * T)
    scale = (2 * T) ** (m.dim / 2)
    ests = [geometry.ball_volume(m, p, rad, samples, seed + i, level) for i, p in enumerate(points)]
    return geometry.VolumeEstimate(
        min(e.value for e in ests) / scale,
        min(e.ci_low for e in ests) / scale,
        min(e.ci_high for e in ests) / scale,
        ests[0].method,
        samples,
    )


def green_potential_bounds(params, d):
    """Interval for int_0^T rho_t(x, y) dt from the two heat-kernel bounds.

    lower = d^(2-n) Gamma(n/2-1, d^2/4T) / (4 pi^(n/2)), the integrated flat kernel;
    upper = (C_gamma omega_n / v) (4 pi)^(-n/2) gamma^(n/2-1) d^(2-n) Gamma(n/2-1, d^2/(gamma T)).
    """
    if not d > 0:
        raise GeometryDomainError("d must be positive")
    n, s = params.n, params.n / 2 - 1
    x_lo = 0.0 if is_inf(params.T) else d * d / (4 * params.T)
    x_hi = 0.0 if is_inf(params.T) else d * d / (params.gamma * params.T)
    lo = d ** (2 - n) * incomplete_gamma_upper(s, x_lo) / (4 * math.pi ** (n / 2))
    if params.euclidean_mode and params.v == geometry.unit_ball_volume(n):
        # same integral as the lower bound; reuse it so the two agree bit for bit
        return lo, lo
    hi = (
        params.C_gamma * geometry.unit_ball_volume(n) / params.v
        * (4 * math.pi) ** (-n / 2) * params.gamma ** s * d ** (2 - n)
        * incomplete_gamma_upper(s, x_hi)
    )
    return lo, hi


def calibrate_c_gamma(n, gamma, safety=4.0, grid=None):
    """Smallest C with flat kernel <= Li-Yau form on a (t, d) grid, times ``safety``."""
    ts, ds = _default_grid() if grid is None else grid
    t, d = np.meshgrid(ts, ds, indexing="ij")
    flat = heat_kernel_flat(n, t, d)
    probe = HeatKernelBoundParams(n, gamma, 1.0, geometry.unit_ball_volume(n))
    upper = li_yau_upper(probe, geometry.unit_ball_volume(n) * t ** (n / 2), t, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(upper > 0, flat / upper, 0.0)
    return float(safety * max(1.0, np.max(ratio)))


def _default_grid():
    g = defaults.load()["kernels"]["grid"]
    return np.geomspace(*g["t_range"], g["count"]), np.geomspace(*g["d_range"], g["count"])


# --- negative curvature bounds -------------------------------------------------


@functools.lru_cache(maxsize=None)
def _hyperbolic_kernel_fn(n):
    """Exact heat kernel of hyperbolic n-space (odd n) as a numpy function of (t, rho)."""
    import sympy as sp

    if n % 2 == 0 or n < 3:
        raise GeometryDomainError("exact hyperbolic heat kernel is implemented for odd n >= 3")
    mm = (n - 1) // 2
    t, rho = sp.symbols("t rho", positive=True)
    expr = sp.exp(-rho**2 / (4 * t))
    for _ in range(mm):
        expr = sp.diff(expr, rho) / sp.sinh(rho)
    expr = (-1) ** mm / (2 * sp.pi) ** mm * (4 * sp.pi * t) ** sp.Rational(-1, 2) * sp.exp(-mm**2 * t) * expr
    return sp.lambdify((t, rho), sp.simplify(expr), "numpy")


def hyperbolic_heat_kernel(n, t, rho):
    """Heat kernel of hyperbolic space (curvature -1, generator Laplacian), odd n."""
    _check_t(t)
    return _hyperbolic_kernel_fn(n)(np.asarray(t, float), np.asarray(rho, float))


def hyperbolic_ball_volume(n, r):
    """Volume of a radius-r ball in hyperbolic n-space."""
    from scipy.integrate import quad

    sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    return sphere * quad(lambda s: math.sinh(s) ** (n - 1), 0.0, r)[0]


def hyperbolic_bound_forms(n, t, d, vol_x, vol_y):
    """Lower and upper bound shapes with unit constant."""
    _check_t(t)
    t, d = np.asarray(t, float), np.asarray(d, float)
    lower = t ** (-n / 2) * np.exp(-d * d / (4 * t) - (n - 1) ** 2 * t / 4 - (n - 1) * d / 2)
    upper = np.asarray(vol_x, float) ** -0.5 * np.asarray(vol_y, float) ** -0.5 * np.exp(t - d * d / (8 * t))
    return lower, upper


def hyperbolic_bounds(n, t, d, vol_x, vol_y, C_n):
    """Heat-kernel bounds under Ric >= -(n-1): returns (lower, upper)."""
    lower, upper = hyperbolic_bound_forms(n, t, d, vol_x, vol_y)
    return lower / C_n, C_n * upper


def hyperbolic_simplified_bounds(n, t, d, C):
    """(1/C) t^(-n/2) e^(-d^2/4t) <= rho <= C t^(-n/2) e^(-d^2/8t)."""
    _check_t(t)
    t, d = np.asarray(t, float), np.asarray(d, float)
    base = t ** (-n / 2)
    return base * np.exp(-d * d / (4 * t)) / C, C * base * np.exp(-d * d / (8 * t))


def calibrate_hyperbolic_constant(n, grid=None):
    """Smallest C_n >= 1 with both bounds bracketing the exact hyperbolic kernel on the grid.

    The volumes entering the upper bound are those of hyperbolic balls of
    radius sqrt(t).
    """
    ts, ds = _default_grid() if grid is None else grid
    t, d = np.meshgrid(ts, ds, indexing="ij")
    exact = hyperbolic_heat_kernel(n, t, d)
    vols = np.array([hyperbolic_ball_volume(n, math.sqrt(tt)) for tt in ts])[:, None]
    lower, upper = hyperbolic_bound_forms(n, t, d, vols, vols)
    with np.errstate(divide="ignore", invalid="ignore"):
        need_lo = np.where(exact > 0, lower / exact, 0.0)
        need_hi = np.where(upper > 0, exact / upper, 0.0)
    return float(max(1.0, np.nanmax(need_lo), np.nanmax(need_hi)))


def calibrate_simplified_constant(n, T, grid=None):
    """Smallest C >= 1 with the simplified bounds bracketing the exact kernel for t < 2T."""
    ts, ds = _default_grid() if grid is None else grid
    ts = ts[ts < 2 * T]
    if ts.size == 0:
        raise GeometryDomainError("grid has no times below 2T")
    t, d = np.meshgrid(ts, ds, indexing="ij")
    exact = hyperbolic_heat_kernel(n, t, d)
    lower, upper = hyperbolic_simplified_bounds(n, t, d, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        need_lo = np.where(exact > 0, lower / exact, 0.0)
        need_hi = np.where(upper > 0, exact / upper, 0.0)
    return float(max(1.0, np.nanmax(need_lo), np.nanmax(need_hi)))

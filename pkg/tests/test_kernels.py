import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

import frozen
from capwalk import geometry, kernels
from capwalk.errors import GeometryDomainError

INF = math.inf
R5 = geometry.ManifoldSpec.euclidean(5)


def pt(m, *c):
    return geometry.Point(m, c)


# --- Martin and Newtonian kernels ----------------------------------------------


def test_martin_kernel_examples():
    x0, x = pt(R5, 0, 0, 0, 0, 0), pt(R5, 1, 0, 0, 0, 0)
    assert kernels.martin_kernel(R5, x0, x, x) == INF
    y = pt(R5, 0, 1, 0, 0, 0)  # |x0 - y| = 1, |x - y| = sqrt 2
    assert kernels.martin_kernel(R5, pt(R5, 0, 2, 0, 0, 0), pt(R5, 0, 0, 0, 0, 0), pt(R5, 0, 1, 0, 0, 0)) == 1.0
    assert kernels.martin_kernel(R5, pt(R5, 0, 3, 0, 0, 0), pt(R5, 0, 0, 0, 0, 0), y) == 8.0


def test_newtonian_kernel_examples():
    m3, m6 = geometry.ManifoldSpec.euclidean(3), geometry.ManifoldSpec.euclidean(6)
    assert kernels.newtonian_kernel(m3, pt(m3, 0, 0, 0), pt(m3, 0, 0, 0)) == INF
    assert kernels.newtonian_kernel(m3, pt(m3, 0, 0, 0), pt(m3, 2, 0, 0)) == 0.5
    assert kernels.newtonian_kernel(m6, pt(m6, 0, 0, 0, 0, 0, 0), pt(m6, 0.5, 0, 0, 0, 0, 0)) == 16.0


coords5 = st.tuples(*[st.floats(-5, 5)] * 5)


@given(coords5, coords5, coords5)
def test_martin_ratio_identity(a, b, c):
    x0, x, y = pt(R5, *a), pt(R5, *b), pt(R5, *c)
    k = kernels.martin_kernel(R5, x0, x, y)
    if math.isfinite(k):
        dxy, d0y = geometry.distance(R5, x, y), geometry.distance(R5, x0, y)
        assert k * dxy**3 == pytest.approx(d0y**3, rel=1e-9, abs=1e-12)


# --- heat kernels -------------------------------------------------------------------


def test_flat_heat_kernel_examples():
    assert kernels.heat_kernel_flat(3, 1 / (4 * math.pi), 0.0) == pytest.approx(1.0, rel=1e-15)
    assert kernels.heat_kernel_flat(3, 1.0, 1e3) == 0.0
    assert kernels.heat_kernel_flat(4, 1.0, 2.0) == pytest.approx((4 * math.pi) ** -2 * math.exp(-1), rel=1e-15)
    with pytest.raises(GeometryDomainError):
        kernels.heat_kernel_flat(3, 0.0, 1.0)


def test_li_yau_euclidean_mode_is_flat():
    ts, ds = np.meshgrid(np.geomspace(0.01, 100, 20), np.geomspace(0.01, 100, 20), indexing="ij")
    for n in (3, 4, 5, 6):
        p = kernels.euclidean_params(n)
        up = kernels.li_yau_upper(p, geometry.unit_ball_volume(n) * ts ** (n / 2), ts, ds)
        flat = kernels.heat_kernel_flat(n, ts, ds)
        assert np.allclose(up, flat, rtol=1e-13, atol=0)
        assert np.array_equal(kernels.cheeger_yau_lower(n, ts, ds), flat)


def test_li_yau_direct_example():
    p = kernels.HeatKernelBoundParams(3, 5.0, 2.0, geometry.unit_ball_volume(3))
    t = 0.7
    up = kernels.li_yau_upper(p, geometry.unit_ball_volume(3) * t**1.5, t, 0.0)
    assert up == pytest.approx(2 * kernels.heat_kernel_flat(3, t, 0.0), rel=1e-14)


def test_li_yau_domain():
    p = kernels.euclidean_params(3)
    with pytest.raises(GeometryDomainError):
        kernels.li_yau_upper(p, 0.0, 1.0, 1.0)
    with pytest.raises(GeometryDomainError):
        kernels.li_yau_upper(p, 1.0, -1.0, 1.0)


# --- constants ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_lambda_euclidean_is_one(n):
    assert kernels.lambda_constant(kernels.euclidean_params(n)) == 1.0


def test_lambda_incomplete_gamma_case():
    p = kernels.HeatKernelBoundParams(4, 4.0, 1.0, geometry.unit_ball_volume(4), T=1.0, diam=2.0)
    assert kernels.lambda_constant(p) == pytest.approx(math.e, rel=1e-12)


def test_lambda_large_T_limit():
    n, v = 5, 3.0
    base = dict(n=n, gamma=5.0, C_gamma=2.0, v=v, diam=1.0)
    limit = geometry.unit_ball_volume(n) / v * (5 / 4) ** 1.5 * 2.0
    assert kernels.lambda_constant(kernels.HeatKernelBoundParams(**base, T=1e12)) == pytest.approx(limit, rel=1e-9)
    assert kernels.lambda_constant(kernels.HeatKernelBoundParams(**base, T=INF)) == pytest.approx(limit, rel=1e-15)


def test_lambda_monotone_on_grid():
    Ts = np.geomspace(0.1, 100, 12)
    diams = np.linspace(0, 5, 12)
    vals = np.array([[kernels.lambda_constant(kernels.HeatKernelBoundParams(5, 5.0, 4.0, 5.0, T=T, diam=d))
                      for d in diams] for T in Ts])
    assert np.all(np.diff(vals, axis=0) <= 1e-12 * vals[1:])
    assert np.all(np.diff(vals, axis=1) >= -1e-12 * vals[:, 1:])


def test_lambda_domain():
    with pytest.raises(GeometryDomainError):
        kernels.lambda_constant(kernels.HeatKernelBoundParams(2, 4.0, 1.0, math.pi))


def test_incomplete_gamma_examples():
    assert kernels.incomplete_gamma_upper(1, 0) == 1.0
    assert kernels.incomplete_gamma_upper(1, 2) == pytest.approx(math.exp(-2), rel=1e-12)
    quad = integrate.quad(lambda x: x**0.5 * math.exp(-x), 0, INF)[0]
    assert kernels.incomplete_gamma_upper(1.5, 0) == pytest.approx(quad, rel=1e-10)
    assert kernels.incomplete_gamma_upper(1.5, 0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-15)


@given(st.floats(0.1, 20.0))
def test_incomplete_gamma_at_zero(s):
    assert kernels.incomplete_gamma_upper(s, 0.0) == pytest.approx(math.gamma(s), rel=1e-10)


def test_noncollapse_flat():
    for T in (0.1, 3.0):
        v = kernels.noncollapse_v(R5, [pt(R5, 0, 0, 0, 0, 0), pt(R5, 1, 2, 3, 4, 5)], T)
        assert v.value == pytest.approx(geometry.unit_ball_volume(5), rel=1e-14)


def test_noncollapse_far_from_bolt():
    m = geometry.ManifoldSpec.eguchi_hanson(4, 1.0)
    v = kernels.noncollapse_v(m, [geometry.Point(m, (200.0, 1.0, 0.0, 0.0))], 2.0)
    assert v.ci_low <= geometry.unit_ball_volume(4) * 1.0001
    assert v.ci_high >= geometry.unit_ball_volume(4) * 0.9999
    assert v.value == pytest.approx(geometry.unit_ball_volume(4), rel=1e-3)


def test_noncollapse_on_bolt_ale_limit():
    m = geometry.ManifoldSpec.eguchi_hanson(4, 1.0)
    v = kernels.noncollapse_v(m, [geometry.Point(m, (1.0, 1.0, 0.0, 0.0))], 1e5, samples=200_000)
    assert v.ci_low <= geometry.unit_ball_volume(4) / 2 <= v.ci_high


# --- Green potential ------------------------------------------------------------------


@pytest.mark.parametrize("d", [1.0, 2.0])
def test_green_potential_flat_matches_classical(d):
    lo, hi = kernels.green_potential_bounds(kernels.euclidean_params(5), d)
    assert lo == pytest.approx(frozen.FLAT_GREEN_N5[d], rel=1e-13)
    assert hi == lo
    assert lo == pytest.approx(math.gamma(1.5) / (4 * math.pi**2.5) * d**-3, rel=1e-14)


@given(st.integers(3, 7), st.floats(4.01, 8.0), st.floats(1.0, 10.0), st.floats(0.01, 100.0),
       st.one_of(st.just(INF), st.floats(0.01, 100.0)))
def test_green_interval_ordered(n, gamma, C, d, T):
    p = kernels.HeatKernelBoundParams(n, gamma, C, geometry.unit_ball_volume(n), T=T)
    lo, hi = kernels.green_potential_bounds(p, d)
    assert 0 <= lo <= hi


def test_green_potential_far_limit():
    p = kernels.HeatKernelBoundParams(5, 5.0, 4.0, geometry.unit_ball_volume(5), T=1.0)
    lo, hi = kernels.green_potential_bounds(p, 60.0)
    assert lo == 0.0 or lo < 1e-300
    assert hi < 1e-150


def test_green_integrates_the_bounds():
    p = kernels.HeatKernelBoundParams(5, 5.0, 4.0, 4.0, T=3.0)
    d = 1.3
    lo = integrate.quad(lambda t: kernels.cheeger_yau_lower(5, t, d), 0, 3.0, epsabs=0, epsrel=1e-12)[0]
    vol = lambda t: p.v * t**2.5
    hi = integrate.quad(lambda t: kernels.li_yau_upper(p, vol(t), t, d), 0, 3.0, epsabs=0, epsrel=1e-12)[0]
    got = kernels.green_potential_bounds(p, d)
    assert got[0] == pytest.approx(lo, rel=1e-9)
    assert got[1] == pytest.approx(hi, rel=1e-9)


def test_conservative_preset_dominates_flat():
    for n in (3, 4, 5, 6):
        p = kernels.conservative_params(n)
        assert p.gamma == 5.0
        ts, ds = kernels._default_grid()
        t, d = np.meshgrid(ts, ds, indexing="ij")
        up = kernels.li_yau_upper(p, geometry.unit_ball_volume(n) * t ** (n / 2), t, d)
        assert np.all(kernels.heat_kernel_flat(n, t, d) <= up)


# --- negative curvature ------------------------------------------------------------------


def test_hyperbolic_kernel_closed_form():
    assert kernels.hyperbolic_heat_kernel(3, 1.0, 1.0) == pytest.approx(frozen.HYPERBOLIC3_T1_D1, rel=1e-13)


def test_hyperbolic_bounds_ordered_on_grid():
    ts, ds = kernels._default_grid()
    t, d = np.meshgrid(ts, ds, indexing="ij")
    for n in (3, 5):
        C = kernels.calibrate_hyperbolic_constant(n)
        vols = np.array([kernels.hyperbolic_ball_volume(n, math.sqrt(x)) for x in ts])[:, None]
        lo, hi = kernels.hyperbolic_bounds(n, t, d, vols, vols, C)
        exact = kernels.hyperbolic_heat_kernel(n, t, d)
        assert np.all(lo <= hi)
        assert np.all(lo <= exact * (1 + 1e-12)) and np.all(exact <= hi * (1 + 1e-12))


def test_hyperbolic_leading_order_small_t():
    n = 3
    ts = np.array([1e-4, 1e-5])
    vols = np.array([kernels.hyperbolic_ball_volume(n, math.sqrt(x)) for x in ts])
    lo, hi = kernels.hyperbolic_bound_forms(n, ts, 0.0, vols, vols)
    assert np.allclose(lo * ts**1.5, 1.0, rtol=1e-3)
    assert np.allclose(hi * ts**1.5, 1 / geometry.unit_ball_volume(3), rtol=1e-3)


def test_hyperbolic_direct_values():
    C = kernels.calibrate_hyperbolic_constant(3)
    vol = kernels.hyperbolic_ball_volume(3, 1.0)
    lo, hi = kernels.hyperbolic_bounds(3, 1.0, 1.0, vol, vol, C)
    assert lo == pytest.approx(math.exp(-0.25 - 1.0 - 1.0) / C, rel=1e-14)
    assert hi == pytest.approx(C / vol * math.exp(1 - 1 / 8), rel=1e-14)
    assert vol == pytest.approx(math.pi * (math.sinh(2.0) - 2.0), rel=1e-12)


def test_simplified_bounds_bracket_exact():
    T = 1.0
    ts, ds = kernels._default_grid()
    ts = ts[ts < 2 * T]
    ds = ds[ds <= 10.0]
    C = kernels.calibrate_simplified_constant(3, T, (ts, ds))
    t, d = np.meshgrid(ts, ds, indexing="ij")
    lo, hi = kernels.hyperbolic_simplified_bounds(3, t, d, C)
    exact = kernels.hyperbolic_heat_kernel(3, t, d)
    assert np.all(lo <= exact * (1 + 1e-12)) and np.all(exact <= hi * (1 + 1e-12))

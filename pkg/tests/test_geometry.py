import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

import frozen
from capwalk import geometry
from capwalk.errors import GeometryDomainError, UnsupportedGeometryError

R3 = geometry.ManifoldSpec.euclidean(3)
EH4 = geometry.ManifoldSpec.eguchi_hanson(4, 1.0)
EH6 = geometry.ManifoldSpec.eguchi_hanson(6, 1.0)


def eh_point(m, r, theta=1.0, phi=0.3, psi=0.2, z=None):
    z = (0.0,) * m.flat_dim if z is None else tuple(z)
    return geometry.Point(m, (r, theta, phi, psi) + z)


# --- types -----------------------------------------------------------------


def test_manifold_invariants():
    with pytest.raises(GeometryDomainError):
        geometry.ManifoldSpec.euclidean(2)
    with pytest.raises(GeometryDomainError):
        geometry.ManifoldSpec.eguchi_hanson(6, 0.0)
    assert EH6.flat_dim == 2 and R3.flat_dim == 3


def test_point_invariants():
    with pytest.raises(GeometryDomainError):
        geometry.Point(R3, (0.0, 0.0))
    with pytest.raises(GeometryDomainError):
        eh_point(EH4, 0.5)


# --- metric and drift -------------------------------------------------------


def test_flat_metric_is_identity():
    assert np.array_equal(geometry.metric_at(R3, geometry.Point(R3, (1.0, 2.0, 3.0))), np.eye(3))


def test_eh_metric_radial_limit():
    assert geometry.metric_at(EH4, eh_point(EH4, 1e4))[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_eh_metric_radial_component():
    g = geometry.metric_at(EH4, eh_point(EH4, 2.0**0.25))
    assert g[0, 0] == pytest.approx(2.0, rel=1e-14)


def test_eh_metric_domain():
    with pytest.raises(GeometryDomainError):
        geometry.metric_at(EH4, eh_point(EH4, 1.0))


def test_flat_drift_zero():
    assert np.array_equal(geometry.laplace_drift(R3, geometry.Point(R3, (1.0, 0.0, 0.0))), np.zeros(3))


def test_eh_radial_drift_at_2a():
    assert geometry.radial_drift(2.0, 1.0) == 49 / 32
    assert geometry.laplace_drift(EH4, eh_point(EH4, 2.0))[0] == 49 / 32


def test_eh_radial_drift_ale_limit():
    r = 1e3
    assert geometry.radial_drift(r, 1.0) * r == pytest.approx(3.0, rel=1e-11)


@given(st.floats(1.05, 30.0), st.floats(0.05, math.pi - 0.05), st.floats(0.0, 2 * math.pi),
       st.floats(0.0, 4 * math.pi))
def test_metric_spd(r, theta, phi, psi):
    g = geometry.metric_at(EH4, eh_point(EH4, r, theta, phi, psi))
    assert np.array_equal(g, g.T)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_metric_spd_bulk():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        p = eh_point(EH4, 1.0 + 20 * rng.random() + 1e-6, 1e-3 + (math.pi - 2e-3) * rng.random(),
                     2 * math.pi * rng.random(), 4 * math.pi * rng.random())
        assert np.linalg.eigvalsh(geometry.metric_at(EH4, p)).min() > 0


def _drift_fd(m, coords, h=1e-5):
    """(1/sqrt|g|) d_j (sqrt|g| g^ij) by central differences."""
    coords = np.array(coords, float)

    def field(c):
        g = geometry.metric_at(m, geometry.Point(m, c))
        return math.sqrt(np.linalg.det(g)) * np.linalg.inv(g)

    root = math.sqrt(np.linalg.det(geometry.metric_at(m, geometry.Point(m, coords))))
    b = np.zeros(m.dim)
    for j in range(m.dim):
        e = np.zeros(m.dim)
        e[j] = h
        b += (field(coords + e) - field(coords - e))[:, j] / (2 * h)
    return b / root


@given(st.floats(1.2, 10.0), st.floats(0.2, math.pi - 0.2), st.floats(0.0, 6.0), st.floats(0.0, 12.0))
def test_drift_matches_finite_differences(r, theta, phi, psi):
    coords = (r, theta, phi, psi, 0.5, -0.5)
    exact = geometry.laplace_drift(EH6, geometry.Point(EH6, coords))
    approx = _drift_fd(EH6, coords)
    assert np.allclose(exact, approx, rtol=1e-6, atol=1e-6 * np.abs(exact).max())


# --- distances ---------------------------------------------------------------


def test_flat_distance():
    assert geometry.distance(R3, geometry.Point(R3, (0, 0, 0)), geometry.Point(R3, (3, 4, 0))) == 5.0


def test_distance_from_bolt_point():
    assert geometry.distance_to(EH4, geometry.BoltSublevel(1.0), eh_point(EH4, 1.0)) == 0.0


def test_distance_to_bolt_quadrature():
    d = geometry.distance_to(EH4, geometry.BoltSublevel(1.0), eh_point(EH4, 2.0))
    assert d == pytest.approx(frozen.EH_ARCLENGTH_R2, abs=1e-10)


def test_unsupported_eh_distance():
    with pytest.raises(UnsupportedGeometryError):
        geometry.distance(EH4, eh_point(EH4, 2.0, theta=0.5), eh_point(EH4, 3.0, theta=1.0))


def test_radial_distance_with_flat_factor():
    p, q = eh_point(EH6, 2.0, z=(0.0, 0.0)), eh_point(EH6, 5.0, z=(3.0, 4.0))
    radial = geometry.radial_arclength(5.0, 1.0) - geometry.radial_arclength(2.0, 1.0)
    assert geometry.distance(EH6, p, q) == pytest.approx(math.hypot(radial, 5.0), rel=1e-14)


def test_arclength_inverse():
    rho = np.geomspace(1e-3, 50.0, 40)
    assert np.allclose(geometry.radial_arclength(geometry.radius_from_arclength(rho, 1.0), 1.0), rho, rtol=1e-12)


def test_union_distance_is_min():
    u = geometry.FiniteUnion((geometry.Ball((3, 0, 0), 1.0), geometry.Ball((0, 5, 0), 1.0)))
    p = geometry.Point(R3, (0, 0, 0))
    assert geometry.distance_to(R3, u, p) == 2.0


def test_membership_tolerance():
    s = geometry.SphereShell((0.0, 0.0, 0.0), 1.0)
    assert geometry.contains(R3, s, geometry.Point(R3, (1.0 + 1e-13, 0.0, 0.0)))
    assert not geometry.contains(R3, s, geometry.Point(R3, (1.0 + 1e-9, 0.0, 0.0)))


vec3 = st.tuples(*[st.floats(-10, 10)] * 3)


@given(vec3, vec3, vec3)
def test_flat_triangle_inequality(x, y, z):
    p, q, w = (geometry.Point(R3, v) for v in (x, y, z))
    assert geometry.distance(R3, p, q) == geometry.distance(R3, q, p)
    assert geometry.distance(R3, p, w) <= geometry.distance(R3, p, q) + geometry.distance(R3, q, w) + 1e-12


@given(st.lists(st.floats(1.0, 40.0), min_size=3, max_size=3))
def test_radial_triangle_inequality(radii):
    p, q, w = (eh_point(EH4, r) for r in radii)
    assert geometry.distance(EH4, p, q) == pytest.approx(geometry.distance(EH4, q, p), abs=1e-12)
    assert geometry.distance(EH4, p, w) <= geometry.distance(EH4, p, q) + geometry.distance(EH4, q, w) + 1e-12


# --- volumes ------------------------------------------------------------------


def test_flat_ball_volumes():
    assert geometry.ball_volume(R3, geometry.Point(R3, (0, 0, 0)), 1.0).value == pytest.approx(4 * math.pi / 3,
                                                                                                 rel=1e-15)
    m4 = geometry.ManifoldSpec.euclidean(4)
    assert geometry.ball_volume(m4, geometry.Point(m4, (0,) * 4), 2.0).value == pytest.approx(
        math.pi**2 / 2 * 16, rel=1e-15)


def test_eh_region_volume():
    est = geometry.region_volume(EH4, geometry.BoltSublevel(2.0), samples=400_000, seed=3)
    assert est.value == pytest.approx(frozen.EH_VOLUME_BELOW_R2, rel=0.01)
    assert est.ci_low <= frozen.EH_VOLUME_BELOW_R2 <= est.ci_high


def test_eh_asymptotic_volume_ratio():
    # balls about a bolt point are only bracketed; the bracket holds the limit at 50a
    # and both of its ends are within 2% of it by 500a
    target = geometry.unit_ball_volume(4) / 2
    center = eh_point(EH4, 1.0)
    est = geometry.ball_volume(EH4, center, 50.0, samples=200_000, seed=1)
    assert est.ci_low / 50.0**4 <= target <= est.ci_high / 50.0**4
    est = geometry.ball_volume(EH4, center, 500.0, samples=200_000, seed=1)
    assert est.ci_low / 500.0**4 == pytest.approx(target, rel=0.02)
    assert est.ci_high / 500.0**4 == pytest.approx(target, rel=0.02)


def test_bishop_gromov_monotone():
    center = eh_point(EH6, 1.0)
    ratios = []
    for r in (2.0, 4.0, 8.0, 16.0):
        est = geometry.ball_volume(EH6, center, r, samples=200_000, seed=11)
        ratios.append((est.ci_low / r**6, est.ci_high / r**6))
    for (lo_prev, hi_prev), (lo, hi) in zip(ratios, ratios[1:]):
        assert lo <= hi_prev


def test_unsupported_volume_center():
    with pytest.raises(UnsupportedGeometryError):
        geometry.ball_volume(EH4, eh_point(EH4, 2.0), 1.5)


# --- singular set -------------------------------------------------------------


def test_curvature_constant_matches_symbolic():
    assert geometry.CURVATURE_CONSTANT == pytest.approx(frozen.EH_CURVATURE_COEFFICIENT, rel=1e-12)


@pytest.mark.parametrize("a", [0.05, 0.3, 1.0])
def test_bolt_threshold_scales_with_a(a):
    r_star = geometry.bolt_sublevel_for_epsilon(a, a)
    assert 1.0 <= r_star / a <= 2.0


def test_bolt_threshold_small_eps_limit():
    assert geometry.bolt_sublevel_for_epsilon(1.0, 1e-6) == 1.0


def test_bolt_threshold_unit_eps():
    # the curvature-scale rule gives (sqrt(384))^(1/6) at a = eps = 1; see the ledger
    assert geometry.bolt_sublevel_for_epsilon(1.0, 1.0) == pytest.approx(frozen.BOLT_R_STAR_EPS1, rel=1e-15)
    r = geometry.bolt_sublevel_for_epsilon(1.0, 1.0)
    assert geometry.eh_curvature_norm(r, 1.0) ** -0.5 == pytest.approx(1.0, rel=1e-12)


def test_bolt_threshold_domain():
    with pytest.raises(GeometryDomainError):
        geometry.bolt_sublevel_for_epsilon(1.0, 0.0)
    with pytest.raises(GeometryDomainError):
        geometry.bolt_sublevel_for_epsilon(1.0, 1.5)


def test_arclength_matches_scipy_quad():
    val = integrate.quad(lambda s: (1 - s**-4) ** -0.5, 1.0, 3.0)[0]
    assert geometry.radial_arclength(3.0, 1.0) == pytest.approx(val, rel=1e-10)

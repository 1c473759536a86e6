"""The frozen reference values are reproduced by their independent oracles."""

import math

import pytest

import frozen
import oracles


def test_arclength_oracle():
    assert float(oracles.eh_arclength(2)) == pytest.approx(frozen.EH_ARCLENGTH_R2, rel=1e-15)


def test_volume_oracle():
    assert float(oracles.eh_volume_below(2)) == pytest.approx(frozen.EH_VOLUME_BELOW_R2, rel=1e-15)
    assert frozen.EH_VOLUME_BELOW_R2 == pytest.approx(15 * math.pi**2 / 4, rel=1e-15)


@pytest.mark.parametrize("r0", [5.0, 10.0, 20.0])
def test_bolt_oracle(r0):
    got = oracles.bolt_hitting(r0, 1, frozen.BOLT_R_STAR_EPS1)
    assert float(got) == pytest.approx(frozen.BOLT_HITTING[r0], rel=1e-14)


@pytest.mark.parametrize("d", [1.0, 2.0])
def test_green_oracle(d):
    assert float(oracles.flat_green(5, d)) == pytest.approx(frozen.FLAT_GREEN_N5[d], rel=1e-14)


def test_clopper_pearson_oracle():
    lo, hi = oracles.clopper_pearson(50, 100, 0.95)
    assert float(lo) == pytest.approx(frozen.CP_50_100_95[0], rel=1e-14)
    assert float(hi) == pytest.approx(frozen.CP_50_100_95[1], rel=1e-14)


def test_segment_energy_oracle():
    assert float(oracles.segment_energy()) == pytest.approx(frozen.SEGMENT_ENERGY_HALF, rel=1e-12)


def test_hyperbolic_oracle():
    assert float(oracles.hyperbolic3_kernel(1, 1)) == pytest.approx(frozen.HYPERBOLIC3_T1_D1, rel=1e-15)


def test_curvature_oracle():
    assert oracles.eh_kretschmann_coefficient() == pytest.approx(frozen.EH_CURVATURE_COEFFICIENT, rel=1e-9)

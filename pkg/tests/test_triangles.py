import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from swivel.errors import DegenerateArmError, DomainError
from swivel.triangles import (
    Curvature, flat_limit_check, heron_area, lhuilier_area, predicted_omega_constant,
    scaled_triangle_angles, triangle_angles, triangle_area,
)

H, E, S = Curvature.HYPERBOLIC, Curvature.EUCLIDEAN, Curvature.SPHERICAL
SQ2 = math.sqrt(2)

# independent oracle: equilateral laws of cosines in 30-digit arithmetic
mpmath.mp.dps = 30
ALPHA_H1 = float(mpmath.acos(mpmath.cosh(1) / (mpmath.cosh(1) + 1)))
ALPHA_S1 = float(mpmath.acos(mpmath.cos(1) / (1 + mpmath.cos(1))))
OMEGA_H111 = float(1 - mpmath.mpf(ALPHA_H1) / mpmath.pi * (1 - mpmath.sqrt(2)))


def test_frozen_oracles():
    assert ALPHA_H1 == pytest.approx(0.9187978721780274, abs=1e-15)
    assert ALPHA_S1 == pytest.approx(1.212395849774586, abs=1e-15)
    assert OMEGA_H111 == pytest.approx(1.1211419116672577, abs=1e-15)


def test_angle_examples():
    assert triangle_angles(E, (3, 4, 5)) == pytest.approx((0.643501109, 0.927295218, math.pi / 2), abs=1e-9)
    assert triangle_angles(H, (1, 1, 1)) == pytest.approx((ALPHA_H1,) * 3, abs=1e-14)
    assert triangle_angles(S, (1, 1, 1)) == pytest.approx((ALPHA_S1,) * 3, abs=1e-14)


def test_area_examples():
    assert triangle_area(H, triangle_angles(H, (1, 1, 1))) == pytest.approx(math.pi - 3 * ALPHA_H1, abs=1e-14)
    assert triangle_area(E, triangle_angles(E, (3, 4, 5)), (3, 4, 5)) == pytest.approx(6.0, abs=1e-14)
    assert triangle_area(S, triangle_angles(S, (1, 1, 1))) == pytest.approx(3 * ALPHA_S1 - math.pi, abs=1e-14)
    assert heron_area((3, 4, 5)) == 6.0
    with pytest.raises(ValueError):
        triangle_area(E, (1, 1, 1))


def test_prediction_examples():
    p = predicted_omega_constant(H, (1, 1, 1), (0, 1, SQ2))
    assert p.predicted_omega == pytest.approx(OMEGA_H111, abs=1e-14)
    assert p.area_form_omega == pytest.approx(p.predicted_omega, abs=1e-12)
    for c in (H, E, S):
        assert predicted_omega_constant(c, (0.5, 0.6, 0.7), (2.5, 0, 0)).predicted_omega == pytest.approx(2.5)


def test_parse():
    assert Curvature.parse("sphere") is S
    assert Curvature.parse("hyperbolic") is H
    assert Curvature.parse(-3.0) is H
    assert Curvature.parse(0) is E


def test_degenerate_and_inadmissible():
    for c in (H, E, S):
        with pytest.raises(DegenerateArmError) as exc:
            predicted_omega_constant(c, (1, 2, 3), (1, 1, 1))
        assert exc.value.witness == (1, 1, -1)
    with pytest.raises(DomainError):
        triangle_angles(E, (1, 1, 5))
    with pytest.raises(DomainError):
        # the library asks for perimeter below pi on the sphere
        triangle_angles(S, (2.5, 2.5, 2.5))


def admissible(c, l):
    s = sorted(l)
    if s[2] >= s[0] + s[1] - 1e-6:
        return False
    if c is S and sum(l) >= math.pi - 1e-6:
        return False
    return True


sides = st.floats(0.05, 1.5)


@pytest.mark.parametrize("c", [H, E, S])
@given(a=sides, b=sides, d=sides)
def test_gauss_bonnet_and_area_forms(c, a, b, d):
    l = (a, b, d)
    assume(admissible(c, l))
    alpha = triangle_angles(c, l)
    assert all(0 < x < math.pi for x in alpha)
    area = lhuilier_area(c, l)
    defect = sum(alpha) - math.pi
    expect = {S: area, E: 0.0, H: -area}[c]
    assert abs(defect - expect) < 1e-9
    p = predicted_omega_constant(c, l, (0.3, 1.0, SQ2))
    assert abs(p.predicted_omega - p.area_form_omega) < 1e-12


@pytest.mark.parametrize("c", [H, E, S])
@given(a=sides, b=sides, d=sides)
def test_permutation_equivariance(c, a, b, d):
    assume(admissible(c, (a, b, d)))
    x = triangle_angles(c, (a, b, d))
    y = triangle_angles(c, (d, a, b))
    assert y == pytest.approx((x[2], x[0], x[1]), abs=1e-12)


@pytest.mark.parametrize("c", [H, E, S])
@given(a=sides, b=sides, d=sides, grow=st.floats(1.001, 1.5))
def test_monotone_in_opposite_side(c, a, b, d, grow):
    assume(admissible(c, (a, b, d)) and admissible(c, (a * grow, b, d)))
    assert triangle_angles(c, (a * grow, b, d))[0] > triangle_angles(c, (a, b, d))[0]


def test_flat_limit():
    d1 = flat_limit_check(H, (3, 4, 5), 1e-3)
    d2 = flat_limit_check(H, (3, 4, 5), 5e-4)
    assert d1 < 1e-5
    assert d1 / d2 == pytest.approx(4.0, rel=0.05)
    assert flat_limit_check(E, (3, 4, 5), 0.5) == 0.0
    with pytest.raises(ValueError):
        flat_limit_check(H, (3, 4, 5), 0.0)


def test_scaled_curvature():
    assert scaled_triangle_angles(-4.0, (0.5, 0.5, 0.5)) == pytest.approx(triangle_angles(H, (1, 1, 1)))
    assert scaled_triangle_angles(0.0, (3, 4, 5)) == triangle_angles(E, (3, 4, 5))
    assert np.allclose(scaled_triangle_angles(0.25, (2, 2, 2)), triangle_angles(S, (1, 1, 1)))

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from swivel.errors import DegenerateArmError, DomainError, NumericalError
from swivel.planar import (
    ArmSpec, Convention, convert_angles, dominant_joint_omega, end_curve, estimate_omega,
    euclidean_angles, psi, quadrature_phase, record_run, reduce_rotating_frame,
    singular_positions, triangle_omega_euclidean, unwrap_argument,
)
from swivel.torus import TorusState, circle_distance
from swivel.unwrap import StepPolicy

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)
# law-of-cosines value, confirmed by mpmath
OMEGA_345 = 1.4882876758142283


def test_psi_examples():
    assert psi((0, 0, 0), (1, 2, 3)) == pytest.approx(6)
    assert abs(psi((0, math.pi), (1, 1))) < 1e-15
    z = psi((0, math.pi / 2), (3, 4))
    assert z == pytest.approx(3 + 4j) and abs(z) == pytest.approx(5)
    with pytest.raises(ValueError):
        psi((0, 0), (1, 2, 3))


def test_convert_angles_examples():
    a = 0.7
    rel = convert_angles(TorusState((a, a, a)), "horizontal", "relative")
    assert circle_distance(rel.angles, (a, 0, 0)).max() < 1e-15
    hor = convert_angles(TorusState((a, 0, 0, 0)), "relative", "horizontal")
    assert circle_distance(hor.angles, (a,) * 4).max() < 1e-15


@given(st.lists(st.floats(0, 2 * math.pi, exclude_max=True), min_size=1, max_size=6))
def test_convert_round_trip(theta):
    s = TorusState(theta)
    back = convert_angles(convert_angles(s, "horizontal", "relative"), "relative", "horizontal")
    assert circle_distance(back.angles, s.angles).max() < 1e-12


def test_arm_validation():
    with pytest.raises(ValueError):
        ArmSpec((), ())
    with pytest.raises(ValueError):
        ArmSpec((1, -1), (1, 1))
    with pytest.raises(ValueError):
        ArmSpec((1, 1), (1,))
    with pytest.raises(ValueError):
        ArmSpec((1,), (1,), (0, 0))


def test_arm_convention_round_trip():
    arm = ArmSpec((1, 2, 3), (1, SQ2, SQ3), (0.1, 0.2, 0.3))
    rel = arm.relative()
    assert rel.convention is Convention.RELATIVE
    assert rel.omegas == pytest.approx((1, SQ2 - 1, SQ3 - SQ2))
    back = rel.horizontal()
    assert back.omegas == pytest.approx(arm.omegas)
    assert circle_distance(back.initial_phases.angles, arm.initial_phases.angles).max() < 1e-12
    t = np.linspace(0, 5, 7)
    assert np.allclose(end_curve(arm, t), end_curve(rel, t))


def test_end_curve_examples():
    assert end_curve(ArmSpec((2,), (1,)), math.pi / 2) == pytest.approx(2j)
    arm = ArmSpec((1, 2, 3), (1, 2, 3), (0.3, 0.2, 0.1))
    assert end_curve(arm, 0.0) == pytest.approx(psi(arm.initial_phases.angles, arm.lengths))
    t = np.linspace(0, 10, 50)
    z = end_curve(ArmSpec((1, 1), (1, -1)), t)
    assert np.allclose(z, 2 * np.cos(t), atol=1e-14)


def test_trajectory_invariants(backend):
    arm = ArmSpec((3, 4, 5), (1, SQ2, SQ3))
    traj = unwrap_argument(arm, 200.0, backend=backend)
    assert np.all(np.abs(np.diff(traj.phi)) < math.pi / 2)
    assert np.allclose(traj.r, np.abs(traj.z), rtol=0, atol=1e-12)
    assert traj.t[0] == 0.0 and traj.t[-1] == 200.0
    assert np.all(np.diff(traj.t) > 0)
    # the recorded samples lie on the curve
    assert np.allclose(traj.z, end_curve(arm, traj.t), atol=1e-12)
    assert traj[3].r == pytest.approx(abs(traj[3].z))


def test_estimate_definition(backend):
    arm = ArmSpec((3, 4, 5), (1, SQ2, SQ3))
    est = estimate_omega(arm, 500.0, backend=backend)
    assert est.omega_hat == est.phi_T / est.T
    traj, est2 = record_run(arm, 500.0, backend=backend, stride=7)
    assert est2.omega_hat == est.omega_hat
    assert traj.phi[-1] == est.phi_T


def test_backends_agree():
    arm = ArmSpec((3, 4, 5), (1, SQ2, SQ3), (0.4, 1.1, 2.0))
    a = estimate_omega(arm, 2000.0, backend="numba")
    b = estimate_omega(arm, 2000.0, backend="numpy")
    assert a.phi_T == pytest.approx(b.phi_T, abs=1e-9)
    assert a.n_zero_passages == b.n_zero_passages


def test_zero_passages_resolved(backend):
    # z(t) = e^{it} - e^{-it} = 2i sin t crosses 0 every pi yet its argument stays pi/2
    arm = ArmSpec((1, 1), (1, -1), (0, math.pi))
    traj = unwrap_argument(arm, 20.0, backend=backend)
    assert np.allclose(traj.phi, math.pi / 2, atol=1e-9)
    assert traj.n_zero_passages == 6
    assert estimate_omega(arm, 20.0, backend=backend).omega_hat == pytest.approx(math.pi / 40)


def test_real_axis_zero_passage(backend):
    # z(t) = 2cos t = r(t) e^{i0} with r changing sign: the continued argument stays 0
    arm = ArmSpec((1, 1), (1, -1))
    traj = unwrap_argument(arm, 10.0, backend=backend)
    assert traj.n_zero_passages == 3
    assert np.abs(traj.phi).max() < 1e-9


def test_nonfinite_step_policy():
    with pytest.raises(ValueError):
        estimate_omega(ArmSpec((1,), (1,)), 0.0)
    with pytest.raises(ValueError):
        StepPolicy(dt=-1).resolve_dt(1.0)


def test_single_joint_and_static():
    assert estimate_omega(ArmSpec((2,), (0.7,)), 1000.0).omega_hat == pytest.approx(0.7, abs=1e-12)
    est = estimate_omega(ArmSpec((2, 1), (0.0, 0.0)), 10.0)
    assert est.omega_hat == 0.0


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0, 6.28), st.floats(0, 6.28))
def test_unwrap_matches_quadrature(l1, l2, w1, w2, p1, p2):
    """Away from zero the sampled argument equals the integral of Im(z'/z)."""
    arm = ArmSpec((l1, l2), (w1, w2), (p1, p2))
    if abs(l1 - l2) < 0.1 * (l1 + l2):
        return
    T = 50.0
    traj = unwrap_argument(arm, T)
    assert abs(traj.phi[-1] - quadrature_phase(arm, T, traj.phi[0])) < 1e-6 * T


def test_dominant_joint():
    assert dominant_joint_omega(ArmSpec((5, 1, 2), (SQ2, 1, SQ3))) == (0, SQ2)
    assert dominant_joint_omega(ArmSpec((3, 4, 5), (1, 1, 1))) is None
    assert dominant_joint_omega(ArmSpec((1, 1), (1, 2))) is None


def test_euclidean_angles():
    a = euclidean_angles((3, 4, 5))
    assert a == pytest.approx((math.asin(0.6), math.asin(0.8), math.pi / 2), abs=1e-12)


def test_triangle_formula_examples():
    p = triangle_omega_euclidean((1, 1, 1), (1, 2, 6))
    assert p.predicted_omega == pytest.approx(3.0)
    p = triangle_omega_euclidean((3, 4, 5), (1, SQ2, SQ3))
    assert p.predicted_omega == pytest.approx(OMEGA_345, abs=1e-15)
    with pytest.raises(DegenerateArmError) as exc:
        triangle_omega_euclidean((1, 2, 3), (1, 1, 1))
    assert exc.value.witness == (1, 1, -1)
    with pytest.raises(DomainError):
        triangle_omega_euclidean((5, 1, 2), (1, 1, 1))


@given(st.floats(1, 2), st.floats(1, 2), st.floats(1, 2))
def test_triangle_coefficients_convex(a, b, c):
    assume(a + b > c and b + c > a and a + c > b)
    p = triangle_omega_euclidean((a, b, c), (0, 0, 0))
    assert all(x > 0 for x in p.coefficients)
    assert sum(p.coefficients) == pytest.approx(1.0, abs=1e-12)


def test_rotating_frame_reduction():
    arm = ArmSpec((1, 2, 3), (1, SQ2, SQ3))
    red, off = reduce_rotating_frame(arm)
    assert off == 1 and red.omegas == pytest.approx((0, SQ2 - 1, SQ3 - 1))
    red, off = reduce_rotating_frame(ArmSpec((1, 2), (0, 1)))
    assert off == 0 and red.omegas == (0, 1)
    with pytest.raises(ValueError):
        reduce_rotating_frame(arm.relative())


def test_frame_equivariance():
    rng = np.random.default_rng(11)
    for _ in range(10):
        l = rng.uniform(1, 2, 3)
        w = rng.uniform(-2, 2, 3)
        arm = ArmSpec(l, w, rng.uniform(0, 2 * math.pi, 3))
        red, off = reduce_rotating_frame(arm)
        full = estimate_omega(arm, 1e4)
        part = estimate_omega(red, 1e4)
        assert abs(full.omega_hat - (part.omega_hat + off)) < 2e-3


def test_singular_positions_examples():
    A, B = singular_positions((3, 4, 5))
    expect = np.mod((-math.pi / 2, math.pi - math.asin(0.8)), 2 * math.pi)
    assert circle_distance(A.angles, expect).max() < 1e-12
    A, _ = singular_positions((1, 1, 1))
    assert circle_distance(A.angles, np.mod((-2 * math.pi / 3, 2 * math.pi / 3), 2 * math.pi)).max() < 1e-12
    with pytest.raises(DomainError):
        singular_positions((1, 2, 3))


@given(st.floats(1, 2), st.floats(1, 2), st.floats(1, 2))
def test_singular_positions_close_the_arm(a, b, c):
    assume(max(a, b, c) < a + b + c - max(a, b, c) - 1e-9)
    A, B = singular_positions((a, b, c))
    for s in (A, B):
        assert abs(psi((0.0, *s.angles), (a, b, c))) < 1e-10 * (a + b + c)
    assert circle_distance(B.angles, -np.asarray(A.angles)).max() < 1e-12

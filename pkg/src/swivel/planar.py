"""Swiveling arm in the Euclidean plane.

Angles follow one of two conventions. ``HORIZONTAL`` measures every joint
against the global x axis. ``RELATIVE`` measures joint j against the
continued direction of joint j-1 (joint 1 against the x axis), the only
convention that makes sense on a curved surface. Horizontal angles are the
cumulative sums of relative ones, and so are the angular velocities.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import njit, resolve_backend
from .errors import DegenerateArmError, DomainError
from .torus import TWO_PI, FlowSpec, TorusState, advance, dominates, signed_sum_nondegenerate
from .curves import CURVE_PLANAR, planar_z  # noqa: F401  (planar_z is part of the API)
from .unwrap import StepPolicy, unwrap_numba, unwrap_numpy


class Convention(enum.Enum):
    HORIZONTAL = "horizontal"
    RELATIVE = "relative"


@dataclass(frozen=True)
class ArmSpec:
    """Joint lengths, angular velocities and initial phases of an N-joint arm."""

    lengths: tuple
    omegas: tuple
    initial_phases: TorusState = None
    convention: Convention = Convention.HORIZONTAL

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        omegas = tuple(float(x) for x in self.omegas)
        if not lengths:
            raise ValueError("an arm needs at least one joint")
        if len(omegas) != len(lengths):
            raise ValueError(f"{len(lengths)} lengths but {len(omegas)} angular velocities")
        if any(not (x > 0 and math.isfinite(x)) for x in lengths):
            raise ValueError("joint lengths must be positive and finite")
        if any(not math.isfinite(w) for w in omegas):
            raise ValueError("angular velocities must be finite")
        phases = self.initial_phases
        if phases is None:
            phases = TorusState((0.0,) * len(lengths))
        elif not isinstance(phases, TorusState):
            phases = TorusState(phases)
        if len(phases) != len(lengths):
            raise ValueError("initial_phases has the wrong dimension")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "initial_phases", phases)
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def n(self):
        return len(self.lengths)

    @property
    def total_length(self):
        return float(sum(self.lengths))

    def horizontal(self):
        """The same physical arm expressed in the horizontal convention."""
        if self.convention is Convention.HORIZONTAL:
            return self
        return ArmSpec(
            self.lengths,
            np.cumsum(self.omegas),
            convert_angles(self.initial_phases, Convention.RELATIVE, Convention.HORIZONTAL),
            Convention.HORIZONTAL,
        )

    def relative(self):
        if self.convention is Convention.RELATIVE:
            return self
        w = np.asarray(self.omegas)
        return ArmSpec(
            self.lengths,
            np.concatenate(([w[0]], np.diff(w))),
            convert_angles(self.initial_phases, Convention.HORIZONTAL, Convention.RELATIVE),
            Convention.RELATIVE,
        )


def psi(theta, lengths):
    """Arm map: sum_j l_j exp(i theta_j) for horizontal angles.

    ``theta`` may carry leading batch dimensions; the last axis indexes joints.
    """
    th = np.asarray(theta, dtype=float)
    l = np.asarray(lengths, dtype=float)
    if th.shape[-1:] != l.shape:
        raise ValueError(f"dimension mismatch: theta has {th.shape[-1:]} joints, lengths {l.shape}")
    out = np.sum(l * np.exp(1j * th), axis=-1)
    return complex(out) if out.ndim == 0 else out


def convert_angles(theta, source, target):
    """Change angle convention.

    relative_1 = horizontal_1, relative_j = horizontal_j - horizontal_{j-1};
    the inverse is a cumulative sum.
    """
    source, target = Convention(source), Convention(target)
    th = np.asarray(theta, dtype=float)
    if source is target:
        out = th
    elif source is Convention.HORIZONTAL:
        out = np.concatenate((th[..., :1], np.diff(th, axis=-1)), axis=-1)
    else:
        out = np.cumsum(th, axis=-1)
    if isinstance(theta, TorusState):
        return TorusState(out)
    return np.mod(out, TWO_PI)


def end_curve(arm, t):
    """Endpoint z(t) of the arm as a complex number (array for array ``t``)."""
    h = arm.horizontal()
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return psi(advance(h.initial_phases, FlowSpec(h.omegas), float(t_arr)).angles, h.lengths)
    theta = np.mod(np.asarray(h.initial_phases.angles) + np.multiply.outer(t_arr, h.omegas), TWO_PI)
    return psi(theta, h.lengths)


def end_velocity(arm, t):
    """z'(t) = sum_j i omega_j l_j exp(i theta_j(t))."""
    h = arm.horizontal()
    t_arr = np.asarray(t, dtype=float)
    theta = np.asarray(h.initial_phases.angles) + np.multiply.outer(t_arr, h.omegas)
    return np.sum(1j * np.asarray(h.omegas) * np.asarray(h.lengths) * np.exp(1j * theta), axis=-1)


# -- argument tracking ------------------------------------------------------------------

def pack_arm(arm):
    h = arm.horizontal()
    return np.concatenate(([h.n], h.lengths, h.omegas, h.initial_phases.angles)).astype(float)


def planar_z_vec(p):
    n = int(p[0])
    l = p[1:1 + n]
    w = p[1 + n:1 + 2 * n]
    th = p[1 + 2 * n:1 + 3 * n]

    def zvec(t):
        a = np.mod(th + np.multiply.outer(t, w), TWO_PI)
        return np.cos(a) @ l, np.sin(a) @ l

    return zvec


@dataclass(frozen=True)
class PlanarSample:
    t: float
    z: complex
    r: float
    phi: float


@dataclass
class Trajectory:
    """Recorded samples of z(t) with the unwrapped argument phi(t)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    n_zero_passages: int = 0

    @property
    def z(self):
        return self.x + 1j * self.y

    @property
    def r(self):
        return np.hypot(self.x, self.y)

    def __len__(self):
        return self.t.size

    def __iter__(self):
        for t, x, y, ph in zip(self.t, self.x, self.y, self.phi):
            yield PlanarSample(float(t), complex(x, y), math.hypot(x, y), float(ph))

    def __getitem__(self, i):
        return PlanarSample(float(self.t[i]), complex(self.x[i], self.y[i]),
                            math.hypot(self.x[i], self.y[i]), float(self.phi[i]))


@dataclass(frozen=True)
class WindingEstimate:
    """phi(T)/T with the spread of phi(t)/t over the final 10% of the run."""

    omega_hat: float
    T: float
    phi_T: float
    tail_spread: float
    n_zero_passages: int = 0
    n_evaluations: int = 0
    extras: dict = field(default_factory=dict, compare=False)


def _run_unwrap(p, kind, zvec_factory, T, omega_scale, scale, step_policy, backend,
                stride, record):
    if not T > 0:
        raise ValueError("horizon T must be positive")
    policy = step_policy or StepPolicy()
    dt = min(policy.resolve_dt(omega_scale), float(T))
    rmin = policy.r_min_rel * scale
    rfail = policy.r_fail_rel * scale
    hmin = dt * policy.h_min_factor
    if resolve_backend(backend) == "numba":
        return unwrap_numba(kind, p, T, dt, rmin, rfail, hmin, stride=stride, record=record)
    return unwrap_numpy(zvec_factory(p), T, dt, rmin, rfail, hmin, stride=stride, record=record)


def _estimate_from(res):
    omega_hat = res.phi_T / res.T
    spread = max(res.tail_max - omega_hat, omega_hat - res.tail_min)
    return WindingEstimate(omega_hat, res.T, res.phi_T, float(spread), res.n_zero, res.n_eval)


def unwrap_argument(arm, T, step_policy=None, backend=None, stride=1):
    """Sample z(t) on [0, T] and return the continuous argument.

    Refinement points inserted near fast swings and zero passages are kept,
    so consecutive samples differ in phi by less than pi/2 when
    ``stride == 1``.
    """
    return record_run(arm, T, step_policy, backend, stride)[0]


def record_run(arm, T, step_policy=None, backend=None, stride=1):
    """One run giving both the recorded Trajectory and its WindingEstimate."""
    h = arm.horizontal()
    res = _run_unwrap(pack_arm(h), CURVE_PLANAR, planar_z_vec, T, max(abs(w) for w in h.omegas),
                      h.total_length, step_policy, backend, stride, True)
    return Trajectory(res.t, res.x, res.y, res.phi, res.n_zero), _estimate_from(res)


def estimate_omega(arm, T, step_policy=None, backend=None):
    """Empirical asymptotic angular velocity phi(T)/T."""
    h = arm.horizontal()
    res = _run_unwrap(pack_arm(h), CURVE_PLANAR, planar_z_vec, T, max(abs(w) for w in h.omegas),
                      h.total_length, step_policy, backend, 1, False)
    return _estimate_from(res)


def quadrature_phase(arm, T, phi0=None, pieces=None):
    """phi(T) from integrating Im(z'/z) with composite Gauss-Legendre.

    Only meaningful for arms whose endpoint stays away from 0.
    """
    h = arm.horizontal()
    if pieces is None:
        pieces = int(math.ceil(T * max(abs(w) for w in h.omegas) / 0.25)) + 1
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, T, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    total = 0.0
    for lo in range(0, pieces, 4096):
        hi = min(pieces, lo + 4096)
        tt = (mid[lo:hi, None] + half[lo:hi, None] * nodes[None, :]).ravel()
        integrand = np.imag(end_velocity(h, tt) / end_curve(h, tt))
        total += float(np.sum(integrand.reshape(hi - lo, -1) @ weights * half[lo:hi]))
    if phi0 is None:
        phi0 = float(np.angle(end_curve(h, 0.0)))
    return phi0 + total


# -- closed forms -----------------------------------------------------------------------

def dominant_joint_omega(arm):
    """(j, omega_j) if joint j (0-based) is longer than all others together."""
    h = arm.horizontal()
    j = dominates(h.lengths)
    if j is None:
        return None
    return j, h.omegas[j]


def _require_nondegenerate(lengths):
    verdict = signed_sum_nondegenerate(lengths)
    if not verdict:
        raise DegenerateArmError(
            f"precondition failed: signed sum zero for lengths {tuple(float(x) for x in lengths)} "
            f"with signs {verdict.witness}", verdict.witness)
    return verdict


def euclidean_angles(lengths):
    """Angles opposite each side by the planar law of cosines."""
    from .triangles import Curvature, triangle_angles

    return triangle_angles(Curvature.EUCLIDEAN, lengths)


@dataclass(frozen=True)
class PlanarTrianglePrediction:
    angles: tuple
    coefficients: tuple
    predicted_omega: float


def triangle_omega_euclidean(lengths, omegas):
    """Convex combination sum_j (alpha_j/pi) omega_j over the triangle's angles.

    ``omegas`` are horizontal-convention angular velocities.
    """
    l = tuple(float(x) for x in lengths)
    w = tuple(float(x) for x in omegas)
    if len(l) != 3 or len(w) != 3:
        raise ValueError("the triangle formula needs exactly three joints")
    _require_nondegenerate(l)
    j = dominates(l)
    if j is not None:
        raise DomainError(f"joint {j + 1} dominates: no triangle with sides {l}")
    alpha = euclidean_angles(l)
    coeffs = tuple(a / math.pi for a in alpha)
    return PlanarTrianglePrediction(alpha, coeffs, float(np.dot(coeffs, w)))


def reduce_rotating_frame(arm):
    """Subtract omega_1 from every joint; returns (reduced arm, omega_1 offset)."""
    if arm.convention is not Convention.HORIZONTAL:
        raise ValueError("rotating-frame reduction is defined for horizontal angles")
    w1 = arm.omegas[0]
    reduced = ArmSpec(arm.lengths, tuple(w - w1 for w in arm.omegas), arm.initial_phases,
                      Convention.HORIZONTAL)
    return reduced, w1


def singular_positions(lengths):
    """The two closed-triangle configurations (theta_2, theta_3) with theta_1 = 0.

    A = (alpha_3 - pi, pi - alpha_2), B = (pi - alpha_3, pi + alpha_2), reduced mod 2pi.
    """
    l = tuple(float(x) for x in lengths)
    if len(l) != 3:
        raise ValueError("singular positions are defined for three joints")
    if dominates(l) is not None or not signed_sum_nondegenerate(l):
        raise DomainError(f"lengths {l} violate the strict triangle inequalities")
    _, a2, a3 = euclidean_angles(l)
    A = TorusState((a3 - math.pi, math.pi - a2))
    B = TorusState((math.pi - a3, math.pi + a2))
    return A, B

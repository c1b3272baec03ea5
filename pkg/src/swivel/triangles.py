"""Geodesic triangles on the three model geometries (curvature +1, 0, -1).

Angles come from the law of cosines of each geometry; ``alpha[j]`` is the
angle opposite the side ``lengths[j]``.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateArmError, DomainError, NumericalError
from .torus import signed_sum_nondegenerate

log = logging.getLogger(__name__)

CLAMP_LIMIT = 1e-9


class Curvature(enum.Enum):
    SPHERICAL = 1
    EUCLIDEAN = 0
    HYPERBOLIC = -1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            aliases = {"SPHERE": "SPHERICAL", "FLAT": "EUCLIDEAN", "PLANE": "EUCLIDEAN",
                       "HYPERBOLIC_PLANE": "HYPERBOLIC"}
            return cls[aliases.get(key, key)]
        return cls(int(np.sign(value)))


def _check_lengths(curvature, lengths):
    l = np.asarray(lengths, dtype=float)
    if l.shape != (3,):
        raise ValueError("a triangle needs exactly three side lengths")
    if np.any(~np.isfinite(l)) or np.any(l <= 0):
        raise DomainError(f"side lengths must be positive, got {tuple(l)}")
    verdict = signed_sum_nondegenerate(l)
    if not verdict:
        raise DegenerateArmError(
            f"precondition failed: signed sum zero for lengths {tuple(float(x) for x in l)} "
            f"with signs {verdict.witness}", verdict.witness)
    for j in range(3):
        others = l.sum() - l[j]
        if not l[j] < others:
            raise DomainError(
                f"strict triangle inequality fails: l{j + 1}={l[j]:.12g} >= {others:.12g}")
    if curvature is Curvature.SPHERICAL and not l.sum() < math.pi:
        raise DomainError(f"spherical triangle needs sum of sides < pi, got {l.sum():.12g}")
    return l


def _clamped_acos(c, what):
    if abs(c) > 1.0:
        excess = abs(c) - 1.0
        if excess > CLAMP_LIMIT:
            raise DomainError(f"law of cosines out of range for {what}: cos = {c!r}")
        log.debug("clamped cosine for %s by %.3g", what, excess)
        c = math.copysign(1.0, c)
    return math.acos(c)


def _cosines(curvature, l):
    out = []
    for j in range(3):
        a, b, c = l[j], l[(j + 1) % 3], l[(j + 2) % 3]
        if curvature is Curvature.EUCLIDEAN:
            cos_alpha = (b * b + c * c - a * a) / (2.0 * b * c)
        elif curvature is Curvature.SPHERICAL:
            cos_alpha = (math.cos(a) - math.cos(b) * math.cos(c)) / (math.sin(b) * math.sin(c))
        else:
            cos_alpha = (math.cosh(b) * math.cosh(c) - math.cosh(a)) / (math.sinh(b) * math.sinh(c))
        out.append(cos_alpha)
    return out


def triangle_angles(curvature, lengths):
    """Interior angles (alpha_1, alpha_2, alpha_3), alpha_j opposite side j."""
    curvature = Curvature.parse(curvature)
    l = _check_lengths(curvature, lengths)
    return tuple(_clamped_acos(c, f"angle {j + 1}") for j, c in enumerate(_cosines(curvature, l)))


def heron_area(lengths):
    a, b, c = sorted((float(x) for x in lengths), reverse=True)
    # Kahan's stable ordering of Heron's formula
    return 0.25 * math.sqrt(max(0.0, (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))))


def triangle_area(curvature, angles, lengths=None):
    """Area of the triangle.

    Curved cases use the angle excess/defect. The flat case needs the side
    lengths (Heron) because angles fix a Euclidean triangle only up to scale.
    """
    curvature = Curvature.parse(curvature)
    total = float(sum(angles))
    if curvature is Curvature.SPHERICAL:
        return total - math.pi
    if curvature is Curvature.HYPERBOLIC:
        return math.pi - total
    if lengths is None:
        raise ValueError("Euclidean area needs the side lengths")
    return heron_area(lengths)


def lhuilier_area(curvature, lengths):
    """Area straight from the side lengths (L'Huilier and its hyperbolic analogue).

    Independent of the angle solver; used to cross-check Gauss-Bonnet.
    """
    curvature = Curvature.parse(curvature)
    l = _check_lengths(curvature, lengths)
    if curvature is Curvature.EUCLIDEAN:
        return heron_area(l)
    s = 0.5 * l.sum()
    f = math.tan if curvature is Curvature.SPHERICAL else math.tanh
    prod = f(s / 2) * f((s - l[0]) / 2) * f((s - l[1]) / 2) * f((s - l[2]) / 2)
    return 4.0 * math.atan(math.sqrt(max(prod, 0.0)))


@dataclass(frozen=True)
class TrianglePrediction:
    curvature_sign: Curvature
    lengths: tuple
    angles: tuple
    area: float
    predicted_omega: float = None
    area_form_omega: float = None


def predicted_omega_constant(curvature, lengths, omegas=None):
    """Asymptotic velocity of a 3-joint arm on a constant-curvature surface.

    ``omegas`` are relative-convention velocities. Evaluates
    omega_1 + omega_2 (pi - alpha_1)/pi + omega_3 alpha_3/pi and the
    equivalent area form omega_1 + omega_2 (alpha_2 + alpha_3 +/- A)/pi +
    omega_3 alpha_3/pi (+A hyperbolic, -A spherical), which must agree.
    """
    curvature = Curvature.parse(curvature)
    alpha = triangle_angles(curvature, lengths)
    l = tuple(float(x) for x in lengths)
    area = triangle_area(curvature, alpha, l)
    if omegas is None:
        return TrianglePrediction(curvature, l, alpha, area)
    w1, w2, w3 = (float(x) for x in omegas)
    a1, a2, a3 = alpha
    omega = w1 + w2 * (math.pi - a1) / math.pi + w3 * a3 / math.pi
    signed_area = {Curvature.HYPERBOLIC: area, Curvature.SPHERICAL: -area,
                   Curvature.EUCLIDEAN: 0.0}[curvature]
    omega_area = w1 + w2 * (a2 + a3 + signed_area) / math.pi + w3 * a3 / math.pi
    scale = max(1.0, abs(w1), abs(w2), abs(w3))
    if abs(omega - omega_area) > 1e-12 * scale:
        raise NumericalError(
            f"angle and area forms disagree: {omega!r} vs {omega_area!r}")
    return TrianglePrediction(curvature, l, alpha, area, omega, omega_area)


def scaled_triangle_angles(kappa, lengths):
    """Angles on a surface of constant curvature ``kappa`` (any real)."""
    if kappa == 0:
        return triangle_angles(Curvature.EUCLIDEAN, lengths)
    s = math.sqrt(abs(kappa))
    return triangle_angles(Curvature.parse(kappa), [s * float(x) for x in lengths])


def flat_limit_check(curvature, lengths, scale):
    """max_j |alpha_j(curved, scale*l) - alpha_j(flat, l)|; decays like scale**2."""
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    flat = triangle_angles(Curvature.EUCLIDEAN, lengths)
    curved = triangle_angles(curvature, [scale * float(x) for x in lengths])
    return max(abs(a - b) for a, b in zip(curved, flat))

"""Surfaces given by a metric on a single chart of the (u, v) plane.

Built-in surfaces are conformal, g = lambda(u, v)^2 (du^2 + dv^2), and ship
analytic derivatives of sigma = ln lambda. They also carry a small
integer ``kind`` and a parameter vector so the numba kernels in
``geodesic`` can evaluate them without calling back into Python.
Expression-string surfaces get numba kernels generated from their
formulas (see ``compiled``); plain callables use the numpy path.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartExitError, ConfigError
from .expr import Expression
from .triangles import Curvature

KIND_GENERIC = -1
KIND_EUCLIDEAN = 0
KIND_POINCARE = 1
KIND_SPHERE = 2
KIND_BUMP = 3

# packed layout read by the kernels: [kind, chart radius, eps, cu, cv, width]
PARAM_SIZE = 6


@dataclass(frozen=True)
class ChartDomain:
    """An open disk (``center``, ``radius``) or rectangle (``lower``, ``upper``)."""

    shape: str = "disk"
    center: tuple = (0.0, 0.0)
    radius: float = math.inf
    lower: tuple = None
    upper: tuple = None

    def contains(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.shape == "disk":
            return np.hypot(u - self.center[0], v - self.center[1]) < self.radius
        return ((u > self.lower[0]) & (u < self.upper[0])
                & (v > self.lower[1]) & (v < self.upper[1]))

    def scale(self):
        if self.shape == "disk":
            return 1.0 if not math.isfinite(self.radius) else min(1.0, self.radius)
        return min(1.0, self.upper[0] - self.lower[0], self.upper[1] - self.lower[1])


class Surface:
    """A Riemannian metric on one chart.

    Parameters
    ----------
    metric : callable
        ``metric(u, v) -> (g11, g12, g22)``, vectorised over arrays.
    partials : callable, optional
        ``partials(u, v) -> ((g11_u, g12_u, g22_u), (g11_v, g12_v, g22_v))``.
        Central differences with step ``h_g`` are used when omitted.
    """

    def __init__(self, name, metric, domain=None, partials=None, h_g=None,
                 kind=KIND_GENERIC, params=None, curvature=None, conformal=None):
        self.name = name
        self._metric = metric
        self.domain = domain or ChartDomain()
        self._partials = partials
        self.h_g = h_g if h_g is not None else 1e-5 * self.domain.scale()
        self.kind = kind
        self.params = np.zeros(PARAM_SIZE) if params is None else np.asarray(params, dtype=float)
        self.params[0] = kind
        self.curvature = curvature
        self.conformal = conformal

    def __repr__(self):
        return f"Surface({self.name!r})"

    @property
    def has_kernel(self):
        return self.kind != KIND_GENERIC or getattr(self, "expression_objects", None) is not None

    @property
    def analytic_partials(self):
        return self._partials is not None

    def metric(self, u, v):
        g11, g12, g22 = self._metric(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
        return (np.broadcast_to(g11, shape).astype(float), np.broadcast_to(g12, shape).astype(float),
                np.broadcast_to(g22, shape).astype(float))

    def metric_matrix(self, point):
        g11, g12, g22 = (float(x) for x in self.metric(point[0], point[1]))
        return np.array([[g11, g12], [g12, g22]])

    def fd_partials(self, u, v, h=None):
        h = self.h_g if h is None else h
        up = self.metric(u + h, v)
        um = self.metric(u - h, v)
        vp = self.metric(u, v + h)
        vm = self.metric(u, v - h)
        du = tuple((a - b) / (2 * h) for a, b in zip(up, um))
        dv = tuple((a - b) / (2 * h) for a, b in zip(vp, vm))
        return du, dv

    def metric_partials(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self._partials is None:
            return self.fd_partials(u, v)
        du, dv = self._partials(u, v)
        shape = np.broadcast(u, v).shape
        fix = lambda t: tuple(np.broadcast_to(x, shape).astype(float) for x in t)
        return fix(du), fix(dv)

    def require_inside(self, u, v, what="point"):
        if not np.all(self.domain.contains(u, v)):
            raise ChartExitError(f"{what} ({float(np.ravel(u)[0]):.6g}, {float(np.ravel(v)[0]):.6g}) "
                                 f"lies outside the chart of {self.name}", (float(np.ravel(u)[0]), float(np.ravel(v)[0])))
        g11, g12, g22 = self.metric(u, v)
        if not (np.all(g11 > 0) and np.all(g11 * g22 - g12 * g12 > 0)):
            raise ConfigError(f"metric of {self.name} is not positive definite at the {what}")

    # closed forms for the model geometries; None when not available
    def closed_exp(self, x, angle, length):
        return None

    def closed_distance(self, x, y):
        return None


class _Conformal(Surface):
    """g = lambda^2 I with analytic lambda and sigma = ln lambda derivatives."""

    def __init__(self, name, kind, params, domain, curvature=None):
        self._p = np.asarray(params, dtype=float)
        super().__init__(name, self._metric_conf, domain=domain, partials=self._partials_conf,
                         kind=kind, params=params, curvature=curvature, conformal=True)

    def lam(self, u, v):
        raise NotImplementedError

    def sigma_grad(self, u, v):
        raise NotImplementedError

    def laplacian_sigma(self, u, v):
        raise NotImplementedError

    def _metric_conf(self, u, v):
        l2 = self.lam(u, v) ** 2
        return l2, 0.0 * l2, l2

    def _partials_conf(self, u, v):
        l2 = self.lam(u, v) ** 2
        su, sv = self.sigma_grad(u, v)
        zero = 0.0 * l2
        return (2 * l2 * su, zero, 2 * l2 * su), (2 * l2 * sv, zero, 2 * l2 * sv)

    def conformal_curvature(self, u, v):
        """K = -Laplacian(ln lambda) / lambda^2."""
        return -self.laplacian_sigma(u, v) / self.lam(u, v) ** 2


class Euclidean(_Conformal):
    def __init__(self, radius=math.inf):
        super().__init__("euclidean", KIND_EUCLIDEAN, [KIND_EUCLIDEAN, _finite(radius), 0, 0, 0, 1],
                         ChartDomain(radius=radius), Curvature.EUCLIDEAN)

    def lam(self, u, v):
        return 1.0 + 0.0 * np.asarray(u) * np.asarray(v)

    def sigma_grad(self, u, v):
        z = 0.0 * np.asarray(u) * np.asarray(v)
        return z, z

    def laplacian_sigma(self, u, v):
        return 0.0 * np.asarray(u) * np.asarray(v)

    def closed_exp(self, x, angle, length):
        z = complex(*x) + length * cmath.exp(1j * angle)
        return (z.real, z.imag), angle

    def closed_distance(self, x, y):
        return math.hypot(y[0] - x[0], y[1] - x[1])


class PoincareDisk(_Conformal):
    """Curvature -1: lambda = 2 / (1 - r^2) on the unit disk."""

    def __init__(self, radius=1.0 - 1e-6):
        if not 0 < radius < 1:
            raise ConfigError("Poincare chart radius must lie in (0, 1)")
        super().__init__("poincare_disk", KIND_POINCARE, [KIND_POINCARE, radius, 0, 0, 0, 1],
                         ChartDomain(radius=radius), Curvature.HYPERBOLIC)

    def lam(self, u, v):
        return 2.0 / (1.0 - np.asarray(u) ** 2 - np.asarray(v) ** 2)

    def sigma_grad(self, u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        d = 1.0 - u * u - v * v
        return 2 * u / d, 2 * v / d

    def laplacian_sigma(self, u, v):
        d = 1.0 - np.asarray(u) ** 2 - np.asarray(v) ** 2
        return 4.0 / d**2

    def closed_exp(self, x, angle, length):
        x = complex(*x)
        w = math.tanh(0.5 * length) * cmath.exp(1j * angle)
        y = (w + x) / (1 + x.conjugate() * w)
        arrival = angle - 2 * cmath.phase(1 + x.conjugate() * w)
        return (y.real, y.imag), arrival

    def closed_distance(self, x, y):
        x = complex(*x)
        y = complex(*y)
        return 2.0 * math.atanh(abs((y - x) / (1 - x.conjugate() * y)))


class StereographicSphere(_Conformal):
    """Unit sphere in a stereographic chart: lambda = 2 / (1 + r^2).

    ``chart="north"`` puts the north pole at the origin; ``"south"`` is the
    companion chart, related by w = 1/z (orientation preserving).
    """

    def __init__(self, chart="north", radius=1e3):
        if chart not in ("north", "south"):
            raise ConfigError("sphere chart must be 'north' or 'south'")
        self.chart = chart
        super().__init__(f"sphere_{chart}", KIND_SPHERE, [KIND_SPHERE, radius, 0, 0, 0, 1],
                         ChartDomain(radius=radius), Curvature.SPHERICAL)

    def lam(self, u, v):
        return 2.0 / (1.0 + np.asarray(u) ** 2 + np.asarray(v) ** 2)

    def sigma_grad(self, u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        d = 1.0 + u * u + v * v
        return -2 * u / d, -2 * v / d

    def laplacian_sigma(self, u, v):
        d = 1.0 + np.asarray(u) ** 2 + np.asarray(v) ** 2
        return -4.0 / d**2

    @staticmethod
    def to_other_chart(point):
        z = complex(*point)
        if z == 0:
            raise ChartExitError("the chart origin is the pole missing from the other chart", point)
        w = 1.0 / z
        return (w.real, w.imag)

    def closed_exp(self, x, angle, length):
        x = complex(*x)
        w = math.tan(0.5 * length) * cmath.exp(1j * angle)
        y = (w + x) / (1 - x.conjugate() * w)
        arrival = angle - 2 * cmath.phase(1 - x.conjugate() * w)
        return (y.real, y.imag), arrival

    def closed_distance(self, x, y):
        x = complex(*x)
        y = complex(*y)
        return 2.0 * math.atan(abs((y - x) / (1 + x.conjugate() * y)))


class ConformalBump(_Conformal):
    """lambda = 1 + eps * exp(-((u - cu)^2 + (v - cv)^2) / width^2)."""

    def __init__(self, eps=0.1, center=(0.0, 0.0), width=1.0, radius=1e6):
        if width <= 0:
            raise ConfigError("bump width must be positive")
        if eps <= -1:
            raise ConfigError("bump amplitude must exceed -1 to keep the metric positive")
        self.eps = float(eps)
        self.center = (float(center[0]), float(center[1]))
        self.width = float(width)
        super().__init__("bump", KIND_BUMP,
                         [KIND_BUMP, radius, eps, center[0], center[1], width],
                         ChartDomain(radius=radius), None if eps else Curvature.EUCLIDEAN)

    def _e(self, u, v):
        du = np.asarray(u) - self.center[0]
        dv = np.asarray(v) - self.center[1]
        return du, dv, np.exp(-(du * du + dv * dv) / self.width**2)

    def lam(self, u, v):
        return 1.0 + self.eps * self._e(u, v)[2]

    def sigma_grad(self, u, v):
        du, dv, e = self._e(u, v)
        lam = 1.0 + self.eps * e
        k = -2.0 * self.eps * e / (self.width**2 * lam)
        return k * du, k * dv

    def laplacian_sigma(self, u, v):
        # Laplacian(ln lam) = Laplacian(lam)/lam - |grad lam|^2/lam^2
        du, dv, e = self._e(u, v)
        w2 = self.width**2
        rho2 = du * du + dv * dv
        lam = 1.0 + self.eps * e
        lap = self.eps * e * (4.0 * rho2 / w2**2 - 4.0 / w2)
        grad2 = (2.0 * self.eps * e / w2) ** 2 * rho2
        return lap / lam - grad2 / lam**2


def _finite(r):
    return r if math.isfinite(r) else 1e300


def euclidean(radius=math.inf):
    return Euclidean(radius)


def poincare_disk(radius=1.0 - 1e-6):
    return PoincareDisk(radius)


def sphere(chart="north", radius=1e3):
    return StereographicSphere(chart, radius)


def conformal_bump(eps=0.1, center=(0.0, 0.0), width=1.0, radius=1e6):
    return ConformalBump(eps, center, width, radius)


def from_expressions(g11, g12, g22, domain=None, name="user", analytic=True, h_g=None):
    """A surface whose metric components are expression strings in u and v.

    With ``analytic=True`` the partials come from symbolic differentiation;
    otherwise central differences are used.
    """
    exprs = [Expression(s) for s in (g11, g12, g22)]

    def metric(u, v):
        return tuple(e(u, v) for e in exprs)

    partials = None
    if analytic:
        du = [e.partial("u") for e in exprs]
        dv = [e.partial("v") for e in exprs]

        def partials(u, v):
            return tuple(e(u, v) for e in du), tuple(e(u, v) for e in dv)

    s = Surface(name, metric, domain=domain, partials=partials, h_g=h_g)
    s.expressions = (g11, g12, g22)
    s.expression_objects = tuple(exprs)
    return s


BUILTINS = {
    "euclidean": euclidean,
    "poincare_disk": poincare_disk,
    "hyperbolic": poincare_disk,
    "sphere": sphere,
    "bump": conformal_bump,
    "conformal_bump": conformal_bump,
}


def builtin(name, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown surface {name!r}; choose from {sorted(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for surface {name!r}: {exc}") from None

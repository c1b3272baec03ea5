"""Swiveling arms on a surface and the kite construction.

An arm on a surface is a chain of geodesic segments: joint 1 leaves the
base point x0 at angle theta_1 from the frame direction d/du, and joint j
leaves the end of joint j-1 at angle theta_j (counterclockwise) from the
arrival direction of joint j-1. Angles are therefore in the relative
convention.

The argument of the endpoint is measured around x0. The default
``chart="frame"`` takes the angle of the chart displacement z - x0 in the
orthonormal frame at x0. ``chart="geodesic_polar"`` takes the initial
angle of the geodesic from x0 to z (found by shooting). The two differ by
a bounded amount along any trajectory inside a convex ball, so they give
the same winding rate; the polar chart costs a shooting solve per sample.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import njit, resolve_backend, thread_cap
from .compiled import kernels_for
from .curves import CURVE_SURFACE, surface_points, surface_z  # noqa: F401  (re-exported)
from .errors import ChartExitError, DegenerateArmError, DomainError, KitePropertyError, NumericalError
from .geodesic import (
    GEO_OK, RTOL, angle_of, exp_lanes, exp_map, kernel_exp_angle, kernel_frame_coords, kernel_log,
    log_map,
    rotate_j,
)
from .planar import ArmSpec, Convention, _estimate_from
from .torus import TWO_PI, signed_sum_nondegenerate
from .unwrap import StepPolicy, unwrap_numba, unwrap_numpy

log = logging.getLogger(__name__)

CHART_MODES = {"frame": 0, "geodesic_polar": 1}
KITE_SCAN = 64


def _wrap(a):
    return math.atan2(math.sin(a), math.cos(a))


# -- vectorised frames ----------------------------------------------------------------

def frame_lanes(surface, u, v):
    """Orthonormal frames (e1, e2) at many points, each of shape (n, 2)."""
    g11, g12, g22 = surface.metric(u, v)
    det = g11 * g22 - g12 * g12
    s = np.sqrt(g11)
    e1 = np.column_stack((1.0 / s, np.zeros_like(s)))
    e2 = np.column_stack((-g12 / (s * np.sqrt(det)), g11 / (s * np.sqrt(det))))
    return e1, e2


def _angle_lanes(surface, u, v, p, q):
    g11, g12, g22 = surface.metric(u, v)
    e1, e2 = frame_lanes(surface, u, v)
    gp = np.column_stack((g11 * p + g12 * q, g12 * p + g22 * q))
    return np.arctan2(np.sum(e2 * gp, axis=1), np.sum(e1 * gp, axis=1))


# -- arm construction --------------------------------------------------------------------

@dataclass(frozen=True)
class ArmEnd:
    """Endpoint of an arm with every joint vertex and arrival direction."""

    point: tuple
    vertices: tuple
    arrivals: tuple = field(default=(), compare=False)


def _relative(arm):
    if not isinstance(arm, ArmSpec):
        raise TypeError("arm must be an ArmSpec")
    return arm.relative() if arm.convention is Convention.HORIZONTAL else arm


def arm_end(surface, x0, phases, lengths, backend=None, method="integrate"):
    """Build the arm joint by joint with relative angles ``phases``."""
    th = np.asarray(getattr(phases, "angles", phases), dtype=float)
    l = np.asarray(lengths, dtype=float)
    if th.shape != l.shape:
        raise ValueError("phases and lengths differ in length")
    point = (float(x0[0]), float(x0[1]))
    surface.require_inside(*point, what="base point")
    vertices = [point]
    arrivals = []
    state = None
    for j, (theta, lj) in enumerate(zip(th, l)):
        if j == 0:
            start = (point, float(theta))
        else:
            heading = angle_of(surface, state.position, state.direction) + float(theta)
            start = (state.position, heading)
        state = exp_map(surface, start, float(lj), backend=backend, method=method)
        vertices.append(state.position)
        arrivals.append(state)
    return ArmEnd(state.position, tuple(vertices), tuple(arrivals))


def pack_surface_arm(surface, x0, arm, rtol=RTOL, chart="frame"):
    rel = _relative(arm)
    head = np.array([surface.params[0], *surface.params[1:], x0[0], x0[1], rtol,
                     CHART_MODES[chart], rel.n], dtype=float)
    return np.concatenate((head, rel.lengths, rel.omegas, rel.initial_phases.angles))


def endpoint_lanes(surface, x0, arm, t, rtol=RTOL):
    """Chart endpoints for an array of times (numpy, any metric); NaN after a chart exit."""
    rel = _relative(arm)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = t.size
    u = np.full(n, float(x0[0]))
    v = np.full(n, float(x0[1]))
    heading = np.zeros(n)
    bad = np.zeros(n, dtype=bool)
    for j in range(rel.n):
        th = np.mod(rel.initial_phases.angles[j] + rel.omegas[j] * t, TWO_PI)
        heading = th if j == 0 else heading + th
        f1, f2 = frame_lanes(surface, u, v)
        d = np.cos(heading)[:, None] * f1 + np.sin(heading)[:, None] * f2
        y, status = exp_lanes(surface, np.column_stack((u, v, d)), rel.lengths[j], rtol)
        bad |= status != GEO_OK
        u, v = y[:, 0], y[:, 1]
        heading = _angle_lanes(surface, u, v, y[:, 2], y[:, 3])
    u = np.where(bad, np.nan, u)
    v = np.where(bad, np.nan, v)
    return u, v


def surface_z_vec(surface, x0, arm, rtol=RTOL, chart="frame"):
    """Vectorised endpoint displacement for the numpy backend (any metric)."""
    rel = _relative(arm)
    x0 = np.asarray(x0, dtype=float)
    g0 = surface.metric_matrix(x0)
    e1 = np.array([1.0, 0.0]) / math.sqrt(g0[0, 0])
    e2 = rotate_j(g0, e1)
    tol = 1e-11 * max(1.0, rel.total_length)

    def zvec(t):
        u, v = endpoint_lanes(surface, x0, rel, t, rtol)
        if chart == "frame":
            dx = np.column_stack((u - x0[0], v - x0[1]))
            return dx @ (g0 @ e1), dx @ (g0 @ e2)
        x = np.full(u.size, np.nan)
        y = np.full(u.size, np.nan)
        for i in np.nonzero(np.isfinite(u))[0]:
            a, L = log_map(surface, x0, (u[i], v[i]), tol=tol, backend="numpy")
            x[i], y[i] = L * math.cos(a), L * math.sin(a)
        return x, y

    return zvec


def _omega_scale(rel):
    return max(abs(x) for x in rel.omegas)


def _run_surface(surface, x0, arm, T, step_policy, backend, chart, rtol, stride, record):
    if chart not in CHART_MODES:
        raise ValueError(f"chart must be one of {sorted(CHART_MODES)}")
    if not T > 0:
        raise ValueError("horizon T must be positive")
    rel = _relative(arm)
    x0 = (float(x0[0]), float(x0[1]))
    arm_end(surface, x0, rel.initial_phases, rel.lengths, backend=backend)
    policy = step_policy or StepPolicy()
    dt = min(policy.resolve_dt(_omega_scale(rel)), float(T))
    scale = rel.total_length
    args = (T, dt, policy.r_min_rel * scale, policy.r_fail_rel * scale, dt * policy.h_min_factor)
    use_numba = resolve_backend(backend) == "numba" and surface.has_kernel
    if resolve_backend(backend) == "numba" and not surface.has_kernel:
        log.info("%s has no compiled kernel; using the numpy path", surface.name)
    packed = pack_surface_arm(surface, x0, rel, rtol, chart)
    kern = kernels_for(surface) if use_numba else None
    try:
        if use_numba:
            res = unwrap_numba(CURVE_SURFACE, packed, *args, stride=stride, record=record,
                               core=kern.unwrap_core)
        else:
            res = unwrap_numpy(surface_z_vec(surface, x0, rel, rtol, chart), *args,
                               stride=stride, record=record, chunk=4096)
    except NumericalError as err:
        t_fail = getattr(err, "t", None)
        if t_fail is not None:
            for tt in (t_fail, t_fail + 0.5 * dt, t_fail + dt):
                th = np.mod(np.asarray(rel.initial_phases.angles) + np.asarray(rel.omegas) * tt, TWO_PI)
                try:
                    arm_end(surface, x0, th, rel.lengths, backend="numpy")
                except ChartExitError as exit_err:
                    raise ChartExitError(
                        f"arm leaves the chart of {surface.name} near t={tt:.6g}; the run must stay "
                        f"inside a ball around x0 within the chart", exit_err.point) from err
        raise
    if record:
        if use_numba:
            pts = kern.surface_points(np.ascontiguousarray(res.t), packed)
            res.u, res.v = pts[:, 0], pts[:, 1]
        else:
            res.u, res.v = endpoint_lanes(surface, x0, rel, res.t, rtol)
    return res, dt, x0


def estimate_omega_surface(surface, x0, arm, T, step_policy=None, backend=None,
                           chart="frame", rtol=RTOL):
    """phi(T)/T for the arm endpoint seen from x0.

    A chart exit anywhere along the run raises ChartExitError; the
    trajectory must stay in a ball around x0 inside the chart.
    """
    res, dt, x0 = _run_surface(surface, x0, arm, T, step_policy, backend, chart, rtol, 1, False)
    est = _estimate_from(res)
    est.extras.update(surface=surface.name, chart=chart, x0=x0, dt=dt)
    return est


@dataclass
class SurfaceTrajectory:
    """Recorded endpoint (chart u, v), its distance-like radius r and unwrapped phi."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    n_zero_passages: int = 0

    def __len__(self):
        return self.t.size


def surface_trajectory(surface, x0, arm, T, stride=1, step_policy=None, backend=None,
                       chart="frame", rtol=RTOL):
    """Like ``estimate_omega_surface`` but keeps every ``stride``-th sample."""
    return record_surface_run(surface, x0, arm, T, stride, step_policy, backend, chart, rtol)[0]


def record_surface_run(surface, x0, arm, T, stride=1, step_policy=None, backend=None,
                       chart="frame", rtol=RTOL):
    """One run giving both the SurfaceTrajectory and its WindingEstimate."""
    res, dt, x0 = _run_surface(surface, x0, arm, T, step_policy, backend, chart, rtol, stride, True)
    est = _estimate_from(res)
    est.extras.update(surface=surface.name, chart=chart, x0=x0, dt=dt)
    traj = SurfaceTrajectory(res.t, res.u, res.v, np.hypot(res.x, res.y), res.phi, res.n_zero)
    return traj, est


# -- kites ------------------------------------------------------------------------------

class _Ops:
    """exp/log in frame angles, through the compiled kernels when available."""

    def __init__(self, surface, backend, rtol, tol):
        self.surface = surface
        self.rtol = rtol
        self.tol = tol
        self.numba = resolve_backend(backend) == "numba" and surface.has_kernel
        self.backend = "numba" if self.numba else "numpy"
        self.kern = kernels_for(surface) if self.numba else None

    def exp(self, x, angle, length):
        if self.numba:
            u, v, arr, st = self.kern.kernel_exp_angle(self.surface.params, x[0], x[1], angle, length, self.rtol)
            if st == 1:
                raise ChartExitError(f"kite geodesic leaves the chart of {self.surface.name}", (u, v))
            if st != 0:
                raise NumericalError("kite geodesic integration failed")
            return (u, v), arr
        st = exp_map(self.surface, (x, angle), length, self.rtol, backend="numpy")
        return st.position, angle_of(self.surface, st.position, st.direction)

    def log(self, x, y):
        if self.numba:
            ang, L, res, st = self.kern.kernel_log(self.surface.params, x[0], x[1], y[0], y[1], self.tol,
                                                   self.rtol)
            if st == 1:
                raise ChartExitError(f"shooting leaves the chart of {self.surface.name}", tuple(x))
            if st != 0:
                raise NumericalError(f"shooting did not converge (residual {res:.3g})")
            return ang, L
        return log_map(self.surface, x, y, self.tol, self.rtol, backend="numpy")


@dataclass(frozen=True)
class KiteTriangle:
    """One triangle of a kite: vertices x0, x1, x2 and angles alpha_j opposite side j."""

    vertices: tuple
    angles: tuple
    psi: float
    residual: float


@dataclass(frozen=True)
class Kite:
    phi: float
    plus: KiteTriangle
    minus: KiteTriangle


def solve_kite(surface, x0, phi, lengths, tol=1e-10, backend=None, rtol=RTOL):
    """The two triangles with sides (l1, l2, l3) glued along the l1 geodesic in direction phi.

    Joint 2 leaves x1 = exp(x0, phi, l1) at angle psi from the arrival
    direction; the roots of d(x0, x2(psi)) = l3 are found by a coarse
    scan and safeguarded Newton. The root with psi in (0, pi) puts x2 on
    the left of the base geodesic and gives the + triangle.
    """
    l1, l2, l3 = (float(x) for x in lengths)
    if min(l1, l2, l3) <= 0:
        raise DomainError("kite side lengths must be positive")
    verdict = signed_sum_nondegenerate((l1, l2, l3))
    if not verdict:
        raise DegenerateArmError(
            f"precondition failed: signed sum zero for lengths {(l1, l2, l3)} "
            f"with signs {verdict.witness}", verdict.witness)
    ops = _Ops(surface, backend, rtol, 0.1 * tol)
    x0 = (float(x0[0]), float(x0[1]))
    x1, arr1 = ops.exp(x0, float(phi), l1)

    def closure(psi):
        x2, arr2 = ops.exp(x1, arr1 + psi, l2)
        ang, d = ops.log(x0, x2)
        return d - l3, x2, arr2, ang, d

    grid = np.linspace(-math.pi, math.pi, KITE_SCAN, endpoint=False)
    vals = np.array([closure(g)[0] for g in grid])
    signs = np.sign(vals)
    brackets = []
    for i in range(KITE_SCAN):
        j = (i + 1) % KITE_SCAN
        if signs[i] == 0:
            brackets.append((grid[i], grid[i]))
        elif signs[i] * signs[j] < 0:
            b = grid[j] if j else grid[j] + TWO_PI
            brackets.append((grid[i], b))
    if len(brackets) != 2:
        raise KitePropertyError(
            f"closure equation has {len(brackets)} sign changes instead of 2 at phi={phi:.6g}; "
            "the arm is too long for the kite property here")

    roots = [_safeguarded_newton(lambda s: closure(s)[0], a, b, tol) for a, b in brackets]
    tris = {}
    for psi in roots:
        psi = _wrap(psi)
        f, x2, arr2, ang02, d = closure(psi)
        # arrival direction of the x0 -> x2 geodesic, for the angle at x2
        _, arr02 = ops.exp(x0, ang02, d)
        alpha3 = math.pi - abs(psi)
        alpha2 = abs(_wrap(ang02 - phi))
        alpha1 = abs(_wrap(arr02 - arr2))
        tri = KiteTriangle((x0, x1, x2), (alpha1, alpha2, alpha3), psi, abs(f))
        key = "plus" if psi > 0 else "minus"
        if key in tris:
            raise KitePropertyError(f"both kite roots lie on the same side at phi={phi:.6g}")
        tris[key] = tri
    return Kite(float(phi), tris["plus"], tris["minus"])


def _safeguarded_newton(f, a, b, tol, max_iter=100):
    """Root of f in [a, b] (f(a) f(b) <= 0): Newton steps kept inside a shrinking bracket."""
    if a == b:
        return a
    fa = f(a)
    fb = f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if (fx < 0) == (fa < 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        h = 1e-6 * max(1.0, abs(x))
        dfx = (f(x + h) - f(x - h)) / (2 * h)
        nxt = x - fx / dfx if dfx != 0 else math.nan
        if not (min(a, b) < nxt < max(a, b)):
            nxt = 0.5 * (a + b)
        if abs(b - a) < 1e-15:
            return nxt
        x = nxt
    raise NumericalError(f"kite root not resolved to {tol:g} (last residual {abs(fx):.3g})")


@dataclass(frozen=True)
class KiteTable:
    """alpha_j^+/-(phi) on a uniform direction grid and their averages."""

    phi_grid: np.ndarray
    angles_plus: np.ndarray
    angles_minus: np.ndarray
    averages_plus: tuple
    averages_minus: tuple
    averages: tuple
    max_residual: float = 0.0
    refinement_change: float = 0.0

    @property
    def grid_size(self):
        return self.phi_grid.size


def _kite_rows(surface, x0, lengths, phis, tol, backend):
    def one(ph):
        k = solve_kite(surface, x0, ph, lengths, tol, backend)
        return k.plus.angles, k.minus.angles, max(k.plus.residual, k.minus.residual)

    workers = min(thread_cap(), len(phis))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, phis))
    else:
        rows = [one(ph) for ph in phis]
    plus = np.array([r[0] for r in rows])
    minus = np.array([r[1] for r in rows])
    return plus, minus, max(r[2] for r in rows)


def average_kite_angles(surface, x0, lengths, grid_size=256, tol=1e-10, change_tol=1e-8,
                        max_grid=4096, backend=None):
    """Trapezoid averages of alpha_j^+/- over directions at x0.

    The grid doubles from ``grid_size`` until the averages move by less
    than ``change_tol`` between the half grid and the full grid.
    """
    m = int(grid_size)
    if m < 4 or m % 2:
        raise ValueError("grid_size must be an even number >= 4")
    phis = TWO_PI * np.arange(m) / m
    plus, minus, resid = _kite_rows(surface, x0, lengths, phis, tol, backend)
    while True:
        full = np.concatenate((plus.mean(axis=0), minus.mean(axis=0)))
        half = np.concatenate((plus[::2].mean(axis=0), minus[::2].mean(axis=0)))
        change = float(np.max(np.abs(full - half)))
        if change < change_tol or 2 * m > max_grid:
            break
        new_phis = TWO_PI * (np.arange(m) + 0.5) / m
        p2, m2, r2 = _kite_rows(surface, x0, lengths, new_phis, tol, backend)
        plus = np.stack((plus, p2), axis=1).reshape(2 * m, 3)
        minus = np.stack((minus, m2), axis=1).reshape(2 * m, 3)
        resid = max(resid, r2)
        m *= 2
        phis = TWO_PI * np.arange(m) / m
    if change >= change_tol:
        log.warning("kite averages still moved by %.3g at grid size %d", change, m)
    ap = tuple(float(x) for x in plus.mean(axis=0))
    am = tuple(float(x) for x in minus.mean(axis=0))
    avg = tuple(0.5 * (a + b) for a, b in zip(ap, am))
    return KiteTable(phis, plus, minus, ap, am, avg, resid, change)


def predicted_omega_surface(kite, omegas):
    """omega_1 + omega_2 (pi - abar_1)/pi + omega_3 abar_3/pi with relative omegas."""
    w1, w2, w3 = (float(x) for x in omegas)
    a1, _, a3 = kite.averages
    return w1 + w2 * (math.pi - a1) / math.pi + w3 * a3 / math.pi


# -- convexity probe ---------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexityEstimate:
    radius: float
    limited_by: str
    radii_probed: tuple
    directions: int


def convexity_radius_estimate(surface, x0, search_bound, n_radii=8, n_directions=12,
                              center_offset=0.05, backend=None):
    """Largest probed radius r <= search_bound whose geodesic discs look strictly convex.

    For centres at and around x0 and each radius on a grid, points of the
    geodesic circle are joined pairwise by shooting, and the midpoint of
    every joining geodesic must lie strictly inside the disc. This is a
    probe, not a certificate. ``limited_by`` says what stopped it:
    "search_bound", "probe" (a chord left the disc) or "chart".
    """
    ops = _Ops(surface, backend, RTOL, 1e-11)
    x0 = (float(x0[0]), float(x0[1]))
    radii = tuple(search_bound * (k + 1) / n_radii for k in range(n_radii))
    centers = [x0] + [
        (x0[0] + center_offset * math.cos(a), x0[1] + center_offset * math.sin(a))
        for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)
    ]
    dirs = TWO_PI * np.arange(n_directions) / n_directions
    best = 0.0
    for r in radii:
        try:
            ok = all(_disc_convex(ops, c, r, dirs) for c in centers)
        except (ChartExitError, NumericalError):
            log.info("convexity probe stopped at r=%.4g by the chart (%d directions)", r, n_directions)
            return ConvexityEstimate(best, "chart", radii, n_directions)
        if not ok:
            log.info("convexity probe failed at r=%.4g (%d directions)", r, n_directions)
            return ConvexityEstimate(best, "probe", radii, n_directions)
        best = r
    return ConvexityEstimate(best, "search_bound", radii, n_directions)


def _disc_convex(ops, center, r, dirs):
    pts = [ops.exp(center, float(a), r)[0] for a in dirs]
    n = len(pts)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            ang, L = ops.log(pts[i], pts[j])
            mid, _ = ops.exp(pts[i], ang, 0.5 * L)
            _, d = ops.log(center, mid)
            if not d < r * (1 - 1e-9):
                return False
    return True


__all__ = [
    "ArmEnd", "arm_end", "estimate_omega_surface", "Kite", "KiteTriangle", "solve_kite",
    "KiteTable", "average_kite_angles", "predicted_omega_surface", "ConvexityEstimate",
    "convexity_radius_estimate", "surface_z", "pack_surface_arm", "surface_trajectory",
    "SurfaceTrajectory", "endpoint_lanes",
]

"""Geodesics on chart surfaces: exponential map, shooting, curvature.

Geodesics are integrated by arc length as the first-order system
(u, v, u', v') with the Dormand-Prince 5(4) pair. After every accepted
step the velocity is rescaled to unit length in the metric, which keeps
the arc-length parametrisation exact to rounding.

Directions at a point are given either as chart vectors or as an angle
measured counterclockwise from the frame e1 = d/du / |d/du|, e2 = J e1,
where J is the metric rotation by +90 degrees.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import njit, resolve_backend
from .compiled import kernels_for
from .errors import ChartExitError, DomainError, NumericalError
from .surfaces import KIND_BUMP, KIND_EUCLIDEAN, KIND_POINCARE, KIND_SPHERE

RTOL = 1e-10
MAX_STEPS = 200_000

GEO_OK = 0
GEO_EXIT = 1
GEO_FAIL = 2

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass(frozen=True)
class GeodesicState:
    """Chart position, unit tangent (chart components) and arc length travelled."""

    position: tuple
    direction: tuple
    arc_length: float = 0.0


# -- numba kernels for the built-in conformal surfaces --------------------------------------

@njit(nogil=True)
def kernel_lambda(sp, u, v):
    kind = int(sp[0])
    if kind == 1:
        return 2.0 / (1.0 - u * u - v * v)
    if kind == 2:
        return 2.0 / (1.0 + u * u + v * v)
    if kind == 3:
        du = u - sp[3]
        dv = v - sp[4]
        return 1.0 + sp[2] * math.exp(-(du * du + dv * dv) / (sp[5] * sp[5]))
    return 1.0


@njit(nogil=True)
def kernel_sigma_grad(sp, u, v):
    kind = int(sp[0])
    if kind == 1:
        d = 1.0 - u * u - v * v
        return 2.0 * u / d, 2.0 * v / d
    if kind == 2:
        d = 1.0 + u * u + v * v
        return -2.0 * u / d, -2.0 * v / d
    if kind == 3:
        w2 = sp[5] * sp[5]
        du = u - sp[3]
        dv = v - sp[4]
        e = sp[2] * math.exp(-(du * du + dv * dv) / w2)
        k = -2.0 * e / (w2 * (1.0 + e))
        return k * du, k * dv
    return 0.0, 0.0


@njit(nogil=True)
def kernel_inside(sp, u, v):
    return u * u + v * v < sp[1] * sp[1]


@njit(nogil=True)
def kernel_speed(sp, u, v, p, q):
    """Metric length of the chart vector (p, q) at (u, v)."""
    return kernel_lambda(sp, u, v) * math.sqrt(p * p + q * q)


@njit(nogil=True)
def kernel_frame_dir(sp, u, v, angle):
    """Chart components of the unit vector at frame angle ``angle``."""
    lam = kernel_lambda(sp, u, v)
    return math.cos(angle) / lam, math.sin(angle) / lam


@njit(nogil=True)
def kernel_frame_coords(sp, u, v, p, q):
    """Components of the chart vector (p, q) in the orthonormal frame at (u, v)."""
    lam = kernel_lambda(sp, u, v)
    return lam * p, lam * q


@njit(nogil=True)
def _f(sp, u, v, p, q):
    su, sv = kernel_sigma_grad(sp, u, v)
    return (p, q, -(su * p * p + 2.0 * sv * p * q - su * q * q),
            -(-sv * p * p + 2.0 * su * p * q + sv * q * q))


@njit(nogil=True)
def _dp5_step(sp, u, v, p, q, h, k1):
    """One Dormand-Prince step, unrolled; returns the 5th-order state and the error vector."""
    a1u, a1v, a1p, a1q = k1
    k2 = _f(sp, u + h * (1 / 5) * a1u, v + h * (1 / 5) * a1v,
            p + h * (1 / 5) * a1p, q + h * (1 / 5) * a1q)
    c1, c2 = 3 / 40, 9 / 40
    k3 = _f(sp, u + h * (c1 * a1u + c2 * k2[0]), v + h * (c1 * a1v + c2 * k2[1]),
            p + h * (c1 * a1p + c2 * k2[2]), q + h * (c1 * a1q + c2 * k2[3]))
    c1, c2, c3 = 44 / 45, -56 / 15, 32 / 9
    k4 = _f(sp, u + h * (c1 * a1u + c2 * k2[0] + c3 * k3[0]),
            v + h * (c1 * a1v + c2 * k2[1] + c3 * k3[1]),
            p + h * (c1 * a1p + c2 * k2[2] + c3 * k3[2]),
            q + h * (c1 * a1q + c2 * k2[3] + c3 * k3[3]))
    c1, c2, c3, c4 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
    k5 = _f(sp, u + h * (c1 * a1u + c2 * k2[0] + c3 * k3[0] + c4 * k4[0]),
            v + h * (c1 * a1v + c2 * k2[1] + c3 * k3[1] + c4 * k4[1]),
            p + h * (c1 * a1p + c2 * k2[2] + c3 * k3[2] + c4 * k4[2]),
            q + h * (c1 * a1q + c2 * k2[3] + c3 * k3[3] + c4 * k4[3]))
    c1, c2, c3, c4, c5 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
    k6 = _f(sp, u + h * (c1 * a1u + c2 * k2[0] + c3 * k3[0] + c4 * k4[0] + c5 * k5[0]),
            v + h * (c1 * a1v + c2 * k2[1] + c3 * k3[1] + c4 * k4[1] + c5 * k5[1]),
            p + h * (c1 * a1p + c2 * k2[2] + c3 * k3[2] + c4 * k4[2] + c5 * k5[2]),
            q + h * (c1 * a1q + c2 * k2[3] + c3 * k3[3] + c4 * k4[3] + c5 * k5[3]))
    b1, b3, b4, b5, b6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
    un = u + h * (b1 * a1u + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0])
    vn = v + h * (b1 * a1v + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1])
    pn = p + h * (b1 * a1p + b3 * k3[2] + b4 * k4[2] + b5 * k5[2] + b6 * k6[2])
    qn = q + h * (b1 * a1q + b3 * k3[3] + b4 * k4[3] + b5 * k5[3] + b6 * k6[3])
    k7 = _f(sp, un, vn, pn, qn)
    e1, e3, e4, e5, e6, e7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
    eu = h * (e1 * a1u + e3 * k3[0] + e4 * k4[0] + e5 * k5[0] + e6 * k6[0] + e7 * k7[0])
    ev = h * (e1 * a1v + e3 * k3[1] + e4 * k4[1] + e5 * k5[1] + e6 * k6[1] + e7 * k7[1])
    ep = h * (e1 * a1p + e3 * k3[2] + e4 * k4[2] + e5 * k5[2] + e6 * k6[2] + e7 * k7[2])
    eq = h * (e1 * a1q + e3 * k3[3] + e4 * k4[3] + e5 * k5[3] + e6 * k6[3] + e7 * k7[3])
    return un, vn, pn, qn, eu, ev, ep, eq


@njit(nogil=True)
def kernel_exp(sp, u, v, p, q, length, rtol, h0):
    """Integrate a unit-speed geodesic for arc length ``length``.

    Returns (u, v, p, q, status, steps). On chart exit (u, v) is the
    last accepted in-chart point.
    """
    if length <= 0.0:
        return u, v, p, q, 0, 0
    k1 = _f(sp, u, v, p, q)
    s = 0.0
    h = min(h0, length)
    steps = 0
    hmin = 1e-14 * max(1.0, length)
    while s < length:
        if steps >= 200_000:
            return u, v, p, q, 2, steps
        last = False
        if s + h >= length:
            h = length - s
            last = True
        un, vn, pn, qn, eu, ev, ep, eq = _dp5_step(sp, u, v, p, q, h, k1)
        err = max(abs(eu) / (rtol * (1.0 + max(abs(u), abs(un)))),
                  abs(ev) / (rtol * (1.0 + max(abs(v), abs(vn)))),
                  abs(ep) / (rtol * (1.0 + max(abs(p), abs(pn)))),
                  abs(eq) / (rtol * (1.0 + max(abs(q), abs(qn)))))
        steps += 1
        if err <= 1.0:
            if not kernel_inside(sp, un, vn):
                return u, v, p, q, 1, steps
            nrm = kernel_speed(sp, un, vn, pn, qn)
            u = un
            v = vn
            p = pn / nrm
            q = qn / nrm
            s = length if last else s + h
            k1 = _f(sp, u, v, p, q)
            h *= 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            h *= max(0.2, 0.9 * err ** -0.2) if math.isfinite(err) else 0.2
            if h < hmin:
                return u, v, p, q, 2, steps
    return u, v, p, q, 0, steps


@njit(nogil=True)
def kernel_exp_angle(sp, u, v, angle, length, rtol):
    """exp from (u, v) along the frame angle ``angle``.

    Returns (u, v, arrival frame angle, status).
    """
    p, q = kernel_frame_dir(sp, u, v, angle)
    uu, vv, p, q, status, _ = kernel_exp(sp, u, v, p, q, length, rtol, min(length, 0.1))
    a, b = kernel_frame_coords(sp, uu, vv, p, q)
    return uu, vv, math.atan2(b, a), status


@njit(nogil=True)
def kernel_log(sp, xu, xv, yu, yv, tol, rtol):
    """Shoot from x to y: returns (angle, length, residual, status).

    Newton on (angle, length); d(end)/d(length) is the arrival velocity and
    d(end)/d(angle) a forward difference. Residual is in metric units.
    """
    du = yu - xu
    dv = yv - xv
    L = kernel_speed(sp, 0.5 * (xu + yu), 0.5 * (xv + yv), du, dv)
    if L == 0.0:
        return 0.0, 0.0, 0.0, 0
    a0, b0 = kernel_frame_coords(sp, xu, xv, du, dv)
    ang = math.atan2(b0, a0)
    res_best = math.inf
    for _ in range(60):
        p0, q0 = kernel_frame_dir(sp, xu, xv, ang)
        eu, ev, ep, eq, st, _n = kernel_exp(sp, xu, xv, p0, q0, L, rtol, min(L, 0.1))
        if st != 0:
            return ang, L, math.inf, st
        ru = eu - yu
        rv = ev - yv
        res = kernel_speed(sp, yu, yv, ru, rv)
        if res <= tol:
            return ang, L, res, 0
        res_best = res
        da = 1e-7
        p1, q1 = kernel_frame_dir(sp, xu, xv, ang + da)
        fu, fv, _p, _q, st, _n = kernel_exp(sp, xu, xv, p1, q1, L, rtol, min(L, 0.1))
        if st != 0:
            da = -da
            p1, q1 = kernel_frame_dir(sp, xu, xv, ang + da)
            fu, fv, _p, _q, st, _n = kernel_exp(sp, xu, xv, p1, q1, L, rtol, min(L, 0.1))
            if st != 0:
                return ang, L, res, st
        j11 = (fu - eu) / da
        j21 = (fv - ev) / da
        j12 = ep
        j22 = eq
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            return ang, L, res, 2
        dA = -(j22 * ru - j12 * rv) / det
        dL = -(-j21 * ru + j11 * rv) / det
        # keep the length positive and the step modest
        step = 1.0
        while L + step * dL <= 0.0 and step > 1e-6:
            step *= 0.5
        if abs(step * dA) > 0.5:
            step *= 0.5 / abs(step * dA)
        ang += step * dA
        L += step * dL
    return ang, L, res_best, 2


# -- numpy lanes: any metric -----------------------------------------------------------

def christoffel_lanes(surface, u, v):
    """Gamma[k, i, j] of shape (2, 2, 2) + u.shape from metric and first partials."""
    g11, g12, g22 = surface.metric(u, v)
    (a_u, b_u, c_u), (a_v, b_v, c_v) = surface.metric_partials(u, v)
    det = g11 * g22 - g12 * g12
    inv = np.array([[g22, -g12], [-g12, g11]]) / det
    # dg[l][i][j] = d_l g_ij
    dg = np.array([[[a_u, b_u], [b_u, c_u]], [[a_v, b_v], [b_v, c_v]]])
    # first kind: Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = np.empty((2, 2, 2) + np.shape(det))
    for l in range(2):
        for i in range(2):
            for j in range(2):
                first[l, i, j] = 0.5 * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
    return np.einsum("kl...,lij...->kij...", inv, first)


def _rhs_lanes(surface, y):
    G = christoffel_lanes(surface, y[:, 0], y[:, 1])
    p = y[:, 2]
    q = y[:, 3]
    out = np.empty_like(y)
    out[:, 0] = p
    out[:, 1] = q
    for k in range(2):
        out[:, 2 + k] = -(G[k, 0, 0] * p * p + 2 * G[k, 0, 1] * p * q + G[k, 1, 1] * q * q)
    return out


def metric_norm(surface, u, v, p, q):
    g11, g12, g22 = surface.metric(u, v)
    return np.sqrt(g11 * p * p + 2 * g12 * p * q + g22 * q * q)


def exp_lanes(surface, y0, lengths, rtol=RTOL, max_steps=MAX_STEPS):
    """Vectorised DP5 over independent geodesics.

    ``y0`` has shape (n, 4) with unit-speed velocities. Returns
    (y, status) where status is GEO_OK / GEO_EXIT / GEO_FAIL per lane.
    """
    y = np.array(y0, dtype=float, copy=True).reshape(-1, 4)
    L = np.broadcast_to(np.asarray(lengths, dtype=float), (y.shape[0],)).copy()
    n = y.shape[0]
    s = np.zeros(n)
    h = np.minimum(L, 0.1)
    status = np.zeros(n, dtype=int)
    active = L > 0
    k = np.empty((7, n, 4))
    steps = 0
    while np.any(active):
        steps += 1
        if steps > max_steps:
            status[active] = GEO_FAIL
            break
        idx = np.nonzero(active)[0]
        ya = y[idx]
        ha = np.minimum(h[idx], L[idx] - s[idx])
        kk = k[:, : idx.size]
        with np.errstate(all="ignore"):
            kk[0] = _rhs_lanes(surface, ya)
            for st in range(1, 7):
                ys = ya + ha[:, None] * np.tensordot(_A[st, :st], kk[:st], axes=(0, 0))
                kk[st] = _rhs_lanes(surface, ys)
            yn = ys
            errv = ha[:, None] * np.tensordot(_E, kk, axes=(0, 0))
            sc = rtol * (1.0 + np.maximum(np.abs(ya), np.abs(yn)))
            err = np.max(np.abs(errv) / sc, axis=1)
        good = np.isfinite(err) & (err <= 1.0) & np.all(np.isfinite(yn), axis=1)
        inside = surface.domain.contains(yn[:, 0], yn[:, 1])
        exit_ = good & ~inside
        status[idx[exit_]] = GEO_EXIT
        active[idx[exit_]] = False
        acc = good & inside
        if np.any(acc):
            ia = idx[acc]
            ynew = yn[acc]
            nrm = metric_norm(surface, ynew[:, 0], ynew[:, 1], ynew[:, 2], ynew[:, 3])
            ynew[:, 2:] /= nrm[:, None]
            y[ia] = ynew
            s[ia] = np.where(ha[acc] >= L[ia] - s[ia], L[ia], s[ia] + ha[acc])
            e_acc = err[acc]
            with np.errstate(divide="ignore"):
                fac = np.where(e_acc == 0, 5.0, np.clip(0.9 * e_acc ** -0.2, 0.2, 5.0))
            h[ia] = ha[acc] * fac
            active[ia[s[ia] >= L[ia]]] = False
        rej = ~good
        if np.any(rej):
            ir = idx[rej]
            e_rej = err[rej]
            fac = np.where(np.isfinite(e_rej), np.clip(0.9 * np.abs(e_rej) ** -0.2, 0.2, 0.9), 0.2)
            h[ir] = ha[rej] * fac
            tiny = h[ir] < 1e-14 * np.maximum(1.0, L[ir])
            status[ir[tiny]] = GEO_FAIL
            active[ir[tiny]] = False
    return y, status


# -- frames ------------------------------------------------------------------------

def frame(surface, point):
    """Orthonormal frame (e1, e2) at ``point``: e1 along d/du, e2 = J e1."""
    g = surface.metric_matrix(point)
    e1 = np.array([1.0, 0.0]) / math.sqrt(g[0, 0])
    return e1, rotate_j(g, e1)


def rotate_j(g, vec):
    """Rotate a tangent vector by +90 degrees in the metric g (2x2 matrix)."""
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    j = np.array([[-g[0, 1], -g[1, 1]], [g[0, 0], g[0, 1]]]) / math.sqrt(det)
    return j @ np.asarray(vec, dtype=float)


def direction_from_angle(surface, point, angle):
    e1, e2 = frame(surface, point)
    return math.cos(angle) * e1 + math.sin(angle) * e2


def angle_of(surface, point, vec):
    """Frame angle of a tangent vector at ``point``."""
    g = surface.metric_matrix(point)
    e1, e2 = frame(surface, point)
    vec = np.asarray(vec, dtype=float)
    return math.atan2(float(e2 @ g @ vec), float(e1 @ g @ vec))


def angle_between(surface, point, a, b):
    """Unoriented angle in [0, pi] between tangent vectors a and b at ``point``."""
    g = surface.metric_matrix(point)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(a @ g @ b)
    cross = math.sqrt(np.linalg.det(g)) * float(a[0] * b[1] - a[1] * b[0])
    return abs(math.atan2(cross, dot))


def signed_angle(surface, point, a, b):
    """Oriented angle from a to b, in (-pi, pi]."""
    g = surface.metric_matrix(point)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(a @ g @ b)
    cross = math.sqrt(np.linalg.det(g)) * float(a[0] * b[1] - a[1] * b[0])
    return math.atan2(cross, dot)


# -- public API ------------------------------------------------------------------

def _check_point(surface, point):
    u, v = float(point[0]), float(point[1])
    if not (math.isfinite(u) and math.isfinite(v)):
        raise DomainError("point must be finite")
    surface.require_inside(u, v)
    return u, v


def christoffel(surface, point):
    """All eight symbols Gamma^k_ij as an array G[k, i, j]."""
    u, v = _check_point(surface, point)
    return christoffel_lanes(surface, np.array(u), np.array(v)).reshape(2, 2, 2)


def gaussian_curvature(surface, point, h=None):
    """Brioschi formula; second partials by central differences of the first."""
    u, v = _check_point(surface, point)
    h = surface.h_g if h is None else h
    E, F, G = (float(x) for x in surface.metric(u, v))
    (E_u, F_u, G_u), (E_v, F_v, G_v) = (tuple(float(x) for x in t) for t in surface.metric_partials(u, v))
    pu_p, pv_p = surface.metric_partials(u + h, v)
    pu_m, pv_m = surface.metric_partials(u - h, v)
    qu_p, qv_p = surface.metric_partials(u, v + h)
    qu_m, qv_m = surface.metric_partials(u, v - h)
    E_vv = float(qv_p[0] - qv_m[0]) / (2 * h)
    G_uu = float(pu_p[2] - pu_m[2]) / (2 * h)
    # F_uv averaged over both orders of differentiation
    F_uv = 0.5 * (float(qu_p[1] - qu_m[1]) + float(pv_p[1] - pv_m[1])) / (2 * h)
    m1 = np.array([
        [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
        [F_v - 0.5 * G_u, E, F],
        [0.5 * G_v, F, G],
    ])
    m2 = np.array([
        [0.0, 0.5 * E_v, 0.5 * G_u],
        [0.5 * E_v, E, F],
        [0.5 * G_u, F, G],
    ])
    return float((_det3(m1) - _det3(m2)) / (E * G - F * F) ** 2)


def _det3(m):
    # cofactor expansion; LU in np.linalg.det warns on subnormal entries
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


def _use_kernel(surface, backend, method):
    if method == "closed_form":
        return "closed_form"
    if method != "integrate":
        raise ValueError("method must be 'integrate' or 'closed_form'")
    if resolve_backend(backend) == "numba" and surface.has_kernel:
        return "numba"
    return "numpy"


def exp_map(surface, start, length, rtol=RTOL, backend=None, method="integrate"):
    """Follow the geodesic from ``start`` for arc length ``length``.

    ``start`` is a GeodesicState (its direction is normalised here) or a
    pair (point, frame angle). The returned direction is the arrival
    tangent, the continuation of the motion.
    """
    if isinstance(start, GeodesicState):
        point, direction = start.position, np.asarray(start.direction, dtype=float)
        u, v = _check_point(surface, point)
    else:
        point, ang = start
        u, v = _check_point(surface, point)
        direction = direction_from_angle(surface, point, float(ang))
    length = float(length)
    if not (math.isfinite(length) and length >= 0):
        raise ValueError("length must be finite and nonnegative")
    nrm = float(metric_norm(surface, u, v, direction[0], direction[1]))
    if not nrm > 0:
        raise ValueError("direction must be a nonzero tangent vector")
    p, q = direction / nrm
    how = _use_kernel(surface, backend, method)
    if how == "closed_form":
        if surface.closed_exp((u, v), 0.0, 0.0) is None:
            raise ValueError(f"{surface.name} has no closed-form exponential map")
        out, arrival = surface.closed_exp((u, v), angle_of(surface, (u, v), (p, q)), length)
        if not surface.domain.contains(*out):
            raise ChartExitError(f"geodesic leaves the chart of {surface.name}", out)
        return GeodesicState(out, tuple(direction_from_angle(surface, out, arrival)), length)
    if how == "numba":
        k = kernels_for(surface)
        eu, ev, ep, eq, status, _ = k.kernel_exp(surface.params, u, v, p, q, length, rtol, min(length, 0.1))
        y = np.array([eu, ev, ep, eq])
    else:
        ys, st = exp_lanes(surface, np.array([[u, v, p, q]]), length, rtol)
        y, status = ys[0], int(st[0])
    if status == GEO_EXIT:
        raise ChartExitError(
            f"geodesic leaves the chart of {surface.name} near ({y[0]:.6g}, {y[1]:.6g})", (y[0], y[1]))
    if status != GEO_OK:
        raise NumericalError(f"geodesic integration failed near ({y[0]:.6g}, {y[1]:.6g})")
    return GeodesicState((float(y[0]), float(y[1])), (float(y[2]), float(y[3])), length)


def _log_numpy(surface, x, y, tol, rtol, max_iter=60):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y - x
    g_mid = surface.metric_matrix(0.5 * (x + y))
    L = math.sqrt(float(d @ g_mid @ d))
    if L == 0.0:
        return 0.0, 0.0, 0.0
    ang = angle_of(surface, x, d)
    g_y = surface.metric_matrix(y)
    best = math.inf
    for _ in range(max_iter):
        da = 1e-7
        starts = np.array([np.concatenate((x, direction_from_angle(surface, x, a))) for a in (ang, ang + da)])
        ends, st = exp_lanes(surface, starts, L, rtol)
        if np.any(st != GEO_OK):
            raise ChartExitError(f"shooting geodesic leaves the chart of {surface.name}",
                                 tuple(ends[0, :2]))
        r = ends[0, :2] - y
        res = math.sqrt(float(r @ g_y @ r))
        best = min(best, res)
        if res <= tol:
            return ang, L, res
        J = np.column_stack(((ends[1, :2] - ends[0, :2]) / da, ends[0, 2:]))
        dA, dL = np.linalg.solve(J, -r)
        step = 1.0
        while L + step * dL <= 0 and step > 1e-6:
            step *= 0.5
        if abs(step * dA) > 0.5:
            step *= 0.5 / abs(step * dA)
        ang += step * dA
        L += step * dL
    raise NumericalError(f"shooting did not converge (best residual {best:.3g})")


def log_map(surface, x, y, tol=1e-10, rtol=RTOL, backend=None):
    """(frame angle at x, length) of the geodesic from x to y found by shooting."""
    xu, xv = _check_point(surface, x)
    yu, yv = _check_point(surface, y)
    if _use_kernel(surface, backend, "integrate") == "numba":
        ang, L, res, status = kernels_for(surface).kernel_log(surface.params, xu, xv, yu, yv, tol, rtol)
        if status == GEO_EXIT:
            raise ChartExitError(f"shooting geodesic leaves the chart of {surface.name}", (xu, xv))
        if status != GEO_OK:
            raise NumericalError(f"shooting did not converge (residual {res:.3g})")
        return math.atan2(math.sin(ang), math.cos(ang)), L
    ang, L, _ = _log_numpy(surface, (xu, xv), (yu, yv), tol, rtol)
    return math.atan2(math.sin(ang), math.cos(ang)), float(L)


def surface_distance(surface, x, y, tol=1e-10, rtol=RTOL, backend=None, method="integrate"):
    """Geodesic distance by shooting (closed forms on request for the model geometries)."""
    if method == "closed_form":
        d = surface.closed_distance(tuple(map(float, x)), tuple(map(float, y)))
        if d is None:
            raise ValueError(f"{surface.name} has no closed-form distance")
        return d
    return log_map(surface, x, y, tol, rtol, backend)[1]


__all__ = [
    "GeodesicState", "christoffel", "gaussian_curvature", "exp_map", "log_map",
    "surface_distance", "frame", "direction_from_angle", "angle_of", "angle_between",
    "signed_angle", "rotate_j", "KIND_EUCLIDEAN", "KIND_POINCARE", "KIND_SPHERE", "KIND_BUMP",
]

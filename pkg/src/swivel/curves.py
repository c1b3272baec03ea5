"""Scalar curve kernels z(t) tracked by the argument unwrapper.

numba cannot disk-cache a kernel that receives another kernel as an
argument, so the unwrapper does not take the curve as a parameter.
It calls ``curve_eval(kind, t, p)`` instead, which dispatches on a
small integer. Expression-defined metrics get their own copy of the
unwrapper with a ``curve_eval`` bound to their compiled ``surface_z``
(see ``compiled``).
"""

import math

import numpy as np

from ._backend import njit
from .geodesic import kernel_exp_angle, kernel_frame_coords, kernel_log

CURVE_PLANAR = 0
CURVE_SURFACE = 1


@njit
def planar_z(t, p):
    """Scalar arm endpoint for packed parameters ``[N, l..., omega_h..., theta_h...]``."""
    n = int(p[0])
    x = 0.0
    y = 0.0
    for j in range(n):
        a = (p[1 + 2 * n + j] + p[1 + n + j] * t) % (2.0 * math.pi)
        x += p[1 + j] * math.cos(a)
        y += p[1 + j] * math.sin(a)
    return x, y


@njit(nogil=True)
def surface_z(t, p):
    """Endpoint displacement from x0 for packed surface + arm parameters."""
    sp = p[:6]
    x0u = p[6]
    x0v = p[7]
    rtol = p[8]
    mode = int(p[9])
    n = int(p[10])
    u = x0u
    v = x0v
    heading = 0.0
    total = 0.0
    for j in range(n):
        total += p[11 + j]
    for j in range(n):
        th = (p[11 + 2 * n + j] + p[11 + n + j] * t) % (2.0 * math.pi)
        heading = th if j == 0 else heading + th
        u, v, heading, status = kernel_exp_angle(sp, u, v, heading, p[11 + j], rtol)
        if status != 0:
            return math.nan, math.nan
    if mode == 0:
        # components in the orthonormal frame at x0 (conformal: lambda(x0) * chart displacement)
        return kernel_frame_coords(sp, x0u, x0v, u - x0u, v - x0v)
    ang, L, res, status = kernel_log(sp, x0u, x0v, u, v, 1e-11 * max(1.0, total), rtol)
    if status != 0:
        return math.nan, math.nan
    return L * math.cos(ang), L * math.sin(ang)


@njit(nogil=True)
def surface_points(ts, p):
    """Chart coordinates of the arm endpoint at each time in ``ts``."""
    sp = p[:6]
    n = int(p[10])
    out = np.empty((ts.size, 2))
    for i in range(ts.size):
        u = p[6]
        v = p[7]
        heading = 0.0
        for j in range(n):
            th = (p[11 + 2 * n + j] + p[11 + n + j] * ts[i]) % (2.0 * math.pi)
            heading = th if j == 0 else heading + th
            u, v, heading, status = kernel_exp_angle(sp, u, v, heading, p[11 + j], p[8])
            if status != 0:
                u = math.nan
                v = math.nan
                break
        out[i, 0] = u
        out[i, 1] = v
    return out


@njit(nogil=True)
def curve_eval(kind, t, p):
    if kind == CURVE_PLANAR:
        return planar_z(t, p)
    return surface_z(t, p)

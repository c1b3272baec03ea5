"""Continuous-argument tracking for a curve z(t) in the plane.

The curve is sampled on a uniform grid. Between consecutive samples the
wrapped increment of arg z must stay below pi/2; otherwise the interval is
bisected. A midpoint with |z| < r_min is a passage through (or
numerically indistinguishable from) zero: a small window around it is
isolated and the increment across it is fixed modulo pi by matching the
one-sided linear extrapolations of the argument. This keeps the argument
real-analytic through zeros of z, where |z| changes sign instead of the
argument jumping.

Two drivers share ``_refine``:

* ``_unwrap_core`` is a numba kernel evaluating the scalar curve
  ``curve_eval(kind, t, p) -> (x, y)`` from ``curves``.
* ``unwrap_numpy`` evaluates a vectorised curve on chunks of the grid
  and hands the (rare) bad intervals to the pure-Python body of
  ``_refine``.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import njit, python_twins
from .curves import curve_eval
from .errors import NumericalError

HALF_PI = 0.5 * math.pi
_STACK = 512
SUB_CAPACITY = 4096

STATUS_OK = 0
STATUS_BOTTOMED_OUT = 1
STATUS_NONFINITE = 2


@dataclass(frozen=True)
class StepPolicy:
    """Sampling and refinement controls.

    ``dt=None`` picks the largest step with ``max|omega| * dt <= max_angle_step``.
    ``r_min`` and ``r_fail`` are relative to the arm's total length.
    """

    dt: float = None
    max_angle_step: float = 0.05
    r_min_rel: float = 1e-9
    r_fail_rel: float = 1e-6
    h_min_factor: float = 2.0**-40

    def resolve_dt(self, omega_scale):
        if self.dt is not None:
            if not self.dt > 0:
                raise ValueError("dt must be positive")
            return float(self.dt)
        if omega_scale <= 0:
            return self.max_angle_step
        return self.max_angle_step / omega_scale


@njit
def arg_increment(xa, ya, xb, yb):
    """arg(zb) - arg(za) wrapped to (-pi, pi]."""
    return math.atan2(xa * yb - ya * xb, xa * xb + ya * yb)


@njit
def _slope(kind, p, t0, x0, y0, t1, rmin):
    # one-sided argument slope from a probe at t1; zero if the probe is unusable
    x1, y1 = curve_eval(kind, t1, p)
    if not (math.hypot(x1, y1) >= rmin):
        return 0.0
    return arg_increment(x0, y0, x1, y1) / (t1 - t0)


@njit
def _resolve_branch(kind, p, a, xa, ya, b, xb, yb, rmin):
    """Increment across a zero window [a, b], chosen modulo pi."""
    d = arg_increment(xa, ya, xb, yb)
    w = b - a
    # both probes give forward slopes: increment divided by signed time step
    sl = _slope(kind, p, a, xa, ya, a - w, rmin)
    sr = _slope(kind, p, b, xb, yb, b + w, rmin)
    pred = 0.5 * (sl + sr) * w
    best = d
    err = abs(d - pred)
    for k in (-1.0, 1.0):
        cand = d + k * math.pi
        e = abs(cand - pred)
        if e < err:
            err = e
            best = cand
    return best


@njit
def _refine(kind, p, a, xa, ya, b, xb, yb, rmin, rfail, hmin,
            record, sub_t, sub_x, sub_y, sub_d):
    """Unwrapped increment of arg z over [a, b] by adaptive bisection.

    Both endpoints must satisfy |z| >= rmin. Interior accepted points are
    written to the ``sub_*`` buffers when ``record`` is set (``sub_d`` is
    the increment from the previous accepted point).

    Returns (total, n_sub, n_zero, n_eval, status).
    """
    stack = np.empty((_STACK, 7))
    stack[0, 0] = a
    stack[0, 1] = xa
    stack[0, 2] = ya
    stack[0, 3] = b
    stack[0, 4] = xb
    stack[0, 5] = yb
    stack[0, 6] = 0.0
    top = 1
    b_end = b
    total = 0.0
    n_sub = 0
    n_zero = 0
    n_eval = 0
    pending = 0.0
    cap = sub_t.shape[0]
    while top > 0:
        top -= 1
        ia = stack[top, 0]
        ixa = stack[top, 1]
        iya = stack[top, 2]
        ib = stack[top, 3]
        ixb = stack[top, 4]
        iyb = stack[top, 5]
        flag = stack[top, 6]
        d = 0.0
        accepted = False
        if flag == 1.0:
            d = _resolve_branch(kind, p, ia, ixa, iya, ib, ixb, iyb, rmin)
            n_eval += 2
            n_zero += 1
            accepted = True
        else:
            d = arg_increment(ixa, iya, ixb, iyb)
            if abs(d) < HALF_PI:
                accepted = True
            elif ib - ia <= hmin:
                if min(math.hypot(ixa, iya), math.hypot(ixb, iyb)) > rfail:
                    return total, n_sub, n_zero, n_eval, STATUS_BOTTOMED_OUT
                d = _resolve_branch(kind, p, ia, ixa, iya, ib, ixb, iyb, rmin)
                n_eval += 2
                n_zero += 1
                accepted = True
        if accepted:
            total += d
            pending += d
            if record and ib < b_end and n_sub < cap:
                sub_t[n_sub] = ib
                sub_x[n_sub] = ixb
                sub_y[n_sub] = iyb
                sub_d[n_sub] = pending
                n_sub += 1
                pending = 0.0
            continue

        m = ia + 0.5 * (ib - ia)
        xm, ym = curve_eval(kind, m, p)
        n_eval += 1
        rm = math.hypot(xm, ym)
        if not (math.isfinite(xm) and math.isfinite(ym)):
            return total, n_sub, n_zero, n_eval, STATUS_NONFINITE
        if top + 3 > _STACK:
            return total, n_sub, n_zero, n_eval, STATUS_BOTTOMED_OUT
        if rm >= rmin:
            stack[top, 0] = m
            stack[top, 1] = xm
            stack[top, 2] = ym
            stack[top, 3] = ib
            stack[top, 4] = ixb
            stack[top, 5] = iyb
            stack[top, 6] = 0.0
            top += 1
            stack[top, 0] = ia
            stack[top, 1] = ixa
            stack[top, 2] = iya
            stack[top, 3] = m
            stack[top, 4] = xm
            stack[top, 5] = ym
            stack[top, 6] = 0.0
            top += 1
            continue

        # isolate the low-|z| window around m
        delta = hmin
        lt = m
        lx = xm
        ly = ym
        while True:
            lt = m - delta
            if lt <= ia:
                lt = ia
                lx = ixa
                ly = iya
                break
            lx, ly = curve_eval(kind, lt, p)
            n_eval += 1
            if math.hypot(lx, ly) >= rmin:
                break
            delta *= 2.0
        delta = hmin
        rt = m
        rx = xm
        ry = ym
        while True:
            rt = m + delta
            if rt >= ib:
                rt = ib
                rx = ixb
                ry = iyb
                break
            rx, ry = curve_eval(kind, rt, p)
            n_eval += 1
            if math.hypot(rx, ry) >= rmin:
                break
            delta *= 2.0
        if rt < ib:
            stack[top, 0] = rt
            stack[top, 1] = rx
            stack[top, 2] = ry
            stack[top, 3] = ib
            stack[top, 4] = ixb
            stack[top, 5] = iyb
            stack[top, 6] = 0.0
            top += 1
        stack[top, 0] = lt
        stack[top, 1] = lx
        stack[top, 2] = ly
        stack[top, 3] = rt
        stack[top, 4] = rx
        stack[top, 5] = ry
        stack[top, 6] = 1.0
        top += 1
        if lt > ia:
            stack[top, 0] = ia
            stack[top, 1] = ixa
            stack[top, 2] = iya
            stack[top, 3] = lt
            stack[top, 4] = lx
            stack[top, 5] = ly
            stack[top, 6] = 0.0
            top += 1
    return total, n_sub, n_zero, n_eval, STATUS_OK


@njit
def _first_good(kind, p, t, x, y, rmin, hmin):
    """Nudge t forward until |z(t)| >= rmin."""
    delta = hmin
    t1 = t
    for _ in range(200):
        if math.hypot(x, y) >= rmin:
            return t1, x, y, True
        t1 = t + delta
        x, y = curve_eval(kind, t1, p)
        if not (math.isfinite(x) and math.isfinite(y)):
            return t1, x, y, False
        delta *= 2.0
    return t1, x, y, False


@njit
def _grow(arr, n):
    out = np.empty(max(2 * arr.shape[0], n))
    out[: arr.shape[0]] = arr
    return out


@njit
def _unwrap_core(kind, p, T, dt, rmin, rfail, hmin, tail_from, stride, record):
    """Stream the unwrapped argument over [0, T].

    Returns (phi_T, T_end, tail_min, tail_max, n_zero, n_eval, status,
    rec_t, rec_x, rec_y, rec_phi, n_rec).
    """
    n_steps = int(math.ceil(T / dt))
    cap = 16
    if record:
        cap = n_steps // stride + 64
    rec_t = np.empty(cap)
    rec_x = np.empty(cap)
    rec_y = np.empty(cap)
    rec_phi = np.empty(cap)
    n_rec = 0
    sub_t = np.empty(SUB_CAPACITY)
    sub_x = np.empty(SUB_CAPACITY)
    sub_y = np.empty(SUB_CAPACITY)
    sub_d = np.empty(SUB_CAPACITY)

    x0, y0 = curve_eval(kind, 0.0, p)
    ta, xa, ya, ok = _first_good(kind, p, 0.0, x0, y0, rmin, hmin)
    if not ok:
        return (math.nan, 0.0, math.nan, math.nan, 0, 0, STATUS_NONFINITE,
                rec_t, rec_x, rec_y, rec_phi, n_rec)
    phi = math.atan2(ya, xa)
    n_zero = 0
    n_eval = 1
    tail_min = math.inf
    tail_max = -math.inf
    if record:
        rec_t[0] = 0.0
        rec_x[0] = x0
        rec_y[0] = y0
        rec_phi[0] = phi
        n_rec = 1
        if ta > 0.0:
            rec_t[1] = ta
            rec_x[1] = xa
            rec_y[1] = ya
            rec_phi[1] = phi
            n_rec = 2

    for k in range(1, n_steps + 1):
        tb = k * dt
        if k == n_steps:
            tb = T
        if tb <= ta:
            continue
        xb, yb = curve_eval(kind, tb, p)
        n_eval += 1
        if not (math.isfinite(xb) and math.isfinite(yb)):
            return (phi, ta, tail_min, tail_max, n_zero, n_eval, STATUS_NONFINITE,
                    rec_t, rec_x, rec_y, rec_phi, n_rec)
        if not (math.hypot(xb, yb) >= rmin):
            tb, xb, yb, ok = _first_good(kind, p, tb, xb, yb, rmin, hmin)
            if not ok:
                return (phi, ta, tail_min, tail_max, n_zero, n_eval, STATUS_NONFINITE,
                        rec_t, rec_x, rec_y, rec_phi, n_rec)
        d = arg_increment(xa, ya, xb, yb)
        if abs(d) < HALF_PI:
            phi += d
        else:
            total, n_sub, nz, ne, status = _refine(
                kind, p, ta, xa, ya, tb, xb, yb, rmin, rfail, hmin,
                record, sub_t, sub_x, sub_y, sub_d)
            n_zero += nz
            n_eval += ne
            if status != STATUS_OK:
                return (phi, ta, tail_min, tail_max, n_zero, n_eval, status,
                        rec_t, rec_x, rec_y, rec_phi, n_rec)
            if record and n_sub > 0:
                if n_rec + n_sub + 1 >= rec_t.shape[0]:
                    rec_t = _grow(rec_t, n_rec + n_sub + 2)
                    rec_x = _grow(rec_x, n_rec + n_sub + 2)
                    rec_y = _grow(rec_y, n_rec + n_sub + 2)
                    rec_phi = _grow(rec_phi, n_rec + n_sub + 2)
                ph = phi
                for i in range(n_sub):
                    ph += sub_d[i]
                    rec_t[n_rec] = sub_t[i]
                    rec_x[n_rec] = sub_x[i]
                    rec_y[n_rec] = sub_y[i]
                    rec_phi[n_rec] = ph
                    n_rec += 1
            phi += total
        if record and (k % stride == 0 or k == n_steps):
            if n_rec >= rec_t.shape[0]:
                rec_t = _grow(rec_t, n_rec + 1)
                rec_x = _grow(rec_x, n_rec + 1)
                rec_y = _grow(rec_y, n_rec + 1)
                rec_phi = _grow(rec_phi, n_rec + 1)
            rec_t[n_rec] = tb
            rec_x[n_rec] = xb
            rec_y[n_rec] = yb
            rec_phi[n_rec] = phi
            n_rec += 1
        if tb >= tail_from:
            v = phi / tb
            if v < tail_min:
                tail_min = v
            if v > tail_max:
                tail_max = v
        ta = tb
        xa = xb
        ya = yb
    return (phi, ta, tail_min, tail_max, n_zero, n_eval, STATUS_OK,
            rec_t, rec_x, rec_y, rec_phi, n_rec)


@dataclass
class UnwrapResult:
    phi_T: float
    T: float
    tail_min: float
    tail_max: float
    n_zero: int
    n_eval: int
    t: np.ndarray = None
    x: np.ndarray = None
    y: np.ndarray = None
    phi: np.ndarray = None


def _check_status(status, t):
    if status == STATUS_OK:
        return
    if status == STATUS_BOTTOMED_OUT:
        err = NumericalError(
            f"argument refinement exhausted near t={t:.6g} away from a zero of the curve; "
            "reduce the base step"
        )
    else:
        err = NumericalError(f"curve evaluation returned a non-finite value near t={t:.6g}")
    err.t = float(t)
    err.status = int(status)
    raise err


def unwrap_numba(kind, p, T, dt, rmin, rfail, hmin, tail_frac=0.1, stride=1, record=False,
                 core=None):
    """Numba driver for the built-in curve ``kind`` (see ``curves``).

    ``core`` replaces ``_unwrap_core``; compiled user metrics pass their
    own copy bound to their curve.
    """
    core = _unwrap_core if core is None else core
    out = core(int(kind), np.ascontiguousarray(p, dtype=float), float(T), float(dt), float(rmin),
               float(rfail), float(hmin), float((1.0 - tail_frac) * T), int(stride), bool(record))
    (phi, t_end, tmin, tmax, n_zero, n_eval, status, rt, rx, ry, rphi, n_rec) = out
    _check_status(status, t_end)
    res = UnwrapResult(phi, t_end, tmin, tmax, int(n_zero), int(n_eval))
    if record:
        res.t, res.x, res.y, res.phi = rt[:n_rec].copy(), rx[:n_rec].copy(), ry[:n_rec].copy(), rphi[:n_rec].copy()
    return res


def unwrap_numpy(zvec, T, dt, rmin, rfail, hmin, tail_frac=0.1, stride=1, record=False,
                 chunk=1 << 16):
    """Numpy driver: ``zvec(t_array) -> (x_array, y_array)``."""
    def zscalar(_kind, t, _p):
        x, y = zvec(np.array([t]))
        return float(x[0]), float(y[0])

    refine, first_good = python_twins(dict(globals(), curve_eval=zscalar), "_refine", "_first_good")

    dummy = np.empty(0)
    sub_t = np.empty(SUB_CAPACITY)
    sub_x = np.empty(SUB_CAPACITY)
    sub_y = np.empty(SUB_CAPACITY)
    sub_d = np.empty(SUB_CAPACITY)

    T = float(T)
    n_steps = int(math.ceil(T / dt))
    tail_from = (1.0 - tail_frac) * T
    x0, y0 = zscalar(0, 0.0, None)
    ta, xa, ya, ok = first_good(0, dummy, 0.0, x0, y0, rmin, hmin)
    if not ok:
        _check_status(STATUS_NONFINITE, 0.0)
    phi = math.atan2(ya, xa)
    n_zero = 0
    n_eval = 1
    tail_min, tail_max = math.inf, -math.inf
    recs = []
    if record:
        pts = [(0.0, x0, y0, phi)]
        if ta > 0.0:
            pts.append((ta, xa, ya, phi))
        recs.append(np.array(pts).T)

    k0 = 1
    while k0 <= n_steps:
        k1 = min(n_steps, k0 + chunk - 1)
        ks = np.arange(k0, k1 + 1)
        tb = ks * dt
        if k1 == n_steps:
            tb[-1] = T
        keep = tb > ta
        ks, tb = ks[keep], tb[keep]
        if tb.size == 0:
            k0 = k1 + 1
            continue
        xb, yb = zvec(tb)
        xb = np.array(xb, dtype=float)
        yb = np.array(yb, dtype=float)
        n_eval += tb.size
        if not (np.all(np.isfinite(xb)) and np.all(np.isfinite(yb))):
            bad = int(np.argmin(np.isfinite(xb) & np.isfinite(yb)))
            _check_status(STATUS_NONFINITE, float(tb[bad]))
        low = np.nonzero(~(np.hypot(xb, yb) >= rmin))[0]
        for i in low:
            t1, x1, y1, ok = first_good(0, dummy, float(tb[i]), float(xb[i]), float(yb[i]), rmin, hmin)
            if not ok:
                _check_status(STATUS_NONFINITE, t1)
            tb[i], xb[i], yb[i] = t1, x1, y1
        # a nudged point can overtake its successor; drop the overtaken ones
        if low.size:
            mono = np.concatenate(([True], tb[1:] > np.maximum.accumulate(tb)[:-1]))
            ks, tb, xb, yb = ks[mono], tb[mono], xb[mono], yb[mono]
        xs = np.concatenate(([xa], xb))
        ys = np.concatenate(([ya], yb))
        ts = np.concatenate(([ta], tb))
        d = np.arctan2(xs[:-1] * ys[1:] - ys[:-1] * xs[1:], xs[:-1] * xs[1:] + ys[:-1] * ys[1:])
        bad = np.nonzero(np.abs(d) >= HALF_PI)[0]
        sub_pts = []
        for i in bad:
            total, n_sub, nz, ne, status = refine(
                0, dummy, float(ts[i]), float(xs[i]), float(ys[i]),
                float(ts[i + 1]), float(xs[i + 1]), float(ys[i + 1]), rmin, rfail, hmin,
                record, sub_t, sub_x, sub_y, sub_d)
            n_zero += nz
            n_eval += ne
            _check_status(status, float(ts[i]))
            d[i] = total
            if record and n_sub:
                sub_pts.append((i, sub_t[:n_sub].copy(), sub_x[:n_sub].copy(),
                                sub_y[:n_sub].copy(), np.cumsum(sub_d[:n_sub])))
        phis = phi + np.cumsum(d)
        if record:
            sel = (ks % stride == 0) | (ks == n_steps)
            block = [np.vstack((tb[sel], xb[sel], yb[sel], phis[sel]))]
            for i, st, sx, sy, sc in sub_pts:
                base = phi if i == 0 else phis[i - 1]
                block.append(np.vstack((st, sx, sy, base + sc)))
            block = np.hstack(block)
            recs.append(block[:, np.argsort(block[0], kind="stable")])
        tail = tb >= tail_from
        if np.any(tail):
            v = phis[tail] / tb[tail]
            tail_min = min(tail_min, float(v.min()))
            tail_max = max(tail_max, float(v.max()))
        phi = float(phis[-1])
        ta, xa, ya = float(tb[-1]), float(xb[-1]), float(yb[-1])
        k0 = k1 + 1

    res = UnwrapResult(phi, ta, tail_min, tail_max, int(n_zero), int(n_eval))
    if record:
        allrec = np.hstack(recs)
        res.t, res.x, res.y, res.phi = (np.ascontiguousarray(r) for r in allrec)
    return res

"""numba kernels for expression-defined metrics.

The geodesic and arm kernels only touch the metric through a handful of
hooks (``_f``, ``kernel_inside``, ``kernel_speed``, ``kernel_frame_dir``,
``kernel_frame_coords``), and the argument unwrapper reaches the curve
only through ``curve_eval``. For a user metric we generate those hooks as
Python source from the expression trees, re-execute the kernel sources
against them and jit the lot. Compilation happens once per surface and
is not cached on disk.
"""

import inspect
import math
import textwrap
from types import SimpleNamespace

import numpy as np

from ._backend import HAVE_NUMBA, njit
from .expr import to_python
from .surfaces import KIND_GENERIC

# kernels re-used verbatim; they find the hooks through their globals
_GEODESIC = ("_dp5_step", "kernel_exp", "kernel_exp_angle", "kernel_log")
_ARM = ("surface_z", "surface_points")
_UNWRAP = ("arg_increment", "_slope", "_resolve_branch", "_refine", "_first_good", "_grow",
           "_unwrap_core")

_HOOKS = '''
def _metric(u, v):
    return {g11}, {g12}, {g22}


def _dmetric(u, v):
    return {g11u}, {g12u}, {g22u}, {g11v}, {g12v}, {g22v}


def _f(sp, u, v, p, q):
    g11, g12, g22 = _metric(u, v)
    a, b, c, d, e, f = _dmetric(u, v)
    det = g11 * g22 - g12 * g12
    # Christoffel symbols of the first kind contracted with (p, q)
    s1 = 0.5 * a * p * p + d * p * q + (e - 0.5 * c) * q * q
    s2 = (b - 0.5 * d) * p * p + c * p * q + 0.5 * f * q * q
    return (p, q, -(g22 * s1 - g12 * s2) / det, -(-g12 * s1 + g11 * s2) / det)


def kernel_inside(sp, u, v):
    if not ({inside}):
        return False
    g11, g12, g22 = _metric(u, v)
    det = g11 * g22 - g12 * g12
    return g11 > 0.0 and det > 0.0 and math.isfinite(det)


def kernel_speed(sp, u, v, p, q):
    g11, g12, g22 = _metric(u, v)
    return math.sqrt(g11 * p * p + 2.0 * g12 * p * q + g22 * q * q)


def kernel_frame_dir(sp, u, v, angle):
    g11, g12, g22 = _metric(u, v)
    s = math.sqrt(g11)
    sd = math.sqrt(g11 * g22 - g12 * g12)
    c = math.cos(angle)
    w = math.sin(angle)
    return c / s - w * g12 / (s * sd), w * g11 / (s * sd)


def kernel_frame_coords(sp, u, v, p, q):
    g11, g12, g22 = _metric(u, v)
    s = math.sqrt(g11)
    sd = math.sqrt(g11 * g22 - g12 * g12)
    a = g11 * p + g12 * q
    b = g12 * p + g22 * q
    return a / s, (-g12 * a + g11 * b) / (s * sd)


def curve_eval(kind, t, p):
    return surface_z(t, p)
'''

_FD = '''
def _dmetric(u, v):
    h = {h!r}
    a1, b1, c1 = _metric(u + h, v)
    a0, b0, c0 = _metric(u - h, v)
    d1, e1, f1 = _metric(u, v + h)
    d0, e0, f0 = _metric(u, v - h)
    k = 0.5 / h
    return (a1 - a0) * k, (b1 - b0) * k, (c1 - c0) * k, (d1 - d0) * k, (e1 - e0) * k, (f1 - f0) * k
'''


def _source(kernel):
    src = textwrap.dedent(inspect.getsource(kernel.py_func))
    lines = src.splitlines()
    while lines and lines[0].startswith("@"):
        lines.pop(0)
    return "\n".join(lines) + "\n"


def _inside_source(domain):
    if domain.shape == "disk":
        if not math.isfinite(domain.radius):
            return "math.isfinite(u) and math.isfinite(v)"
        cu, cv = (float(x) for x in domain.center)
        return f"(u - {cu!r}) ** 2 + (v - {cv!r}) ** 2 < {float(domain.radius) ** 2!r}"
    (lu, lv), (uu, uv) = domain.lower, domain.upper
    return f"{float(lu)!r} < u < {float(uu)!r} and {float(lv)!r} < v < {float(uv)!r}"


def hook_source(surface):
    """Generated hook source for an expression surface."""
    exprs = surface.expression_objects
    fields = {name: to_python(e.tree, "math") for name, e in zip(("g11", "g12", "g22"), exprs)}
    for var in ("u", "v"):
        for name, e in zip(("g11", "g12", "g22"), exprs):
            fields[name + var] = to_python(e.partial(var).tree, "math")
    src = _HOOKS.format(inside=_inside_source(surface.domain), **fields)
    if not surface.analytic_partials:
        src += _FD.format(h=float(surface.h_g))
    return src


def build(surface):
    """Namespace with exp/log/arm/unwrap kernels specialised to ``surface``."""
    from . import curves, geodesic, unwrap

    ns = {"math": math, "np": np}
    # module constants the re-executed kernels refer to
    for mod in (geodesic, unwrap):
        ns.update({k: v for k, v in vars(mod).items()
                   if k.isupper() and isinstance(v, (int, float, np.ndarray))})
    code = hook_source(surface)
    parts = ([getattr(geodesic, n) for n in _GEODESIC] + [getattr(curves, n) for n in _ARM]
             + [getattr(unwrap, n) for n in _UNWRAP])
    code += "".join("\n\n" + _source(k) for k in parts)
    exec(compile(code, f"<swivel metric {surface.name}>", "exec"), ns)
    jit = njit(nogil=True, cache=False, error_model="numpy") if HAVE_NUMBA else (lambda f: f)
    names = [n for n, obj in list(ns.items()) if inspect.isfunction(obj)]
    for n in names:
        ns[n] = jit(ns[n])
    funcs = {n: ns[n] for n in names}
    return SimpleNamespace(source=code, unwrap_core=funcs["_unwrap_core"], **funcs)


def kernels_for(surface):
    """Kernel namespace for ``surface``: the shared built-in kernels, or a compiled set."""
    from . import curves, geodesic, unwrap

    if surface.kind != KIND_GENERIC:
        return SimpleNamespace(unwrap_core=unwrap._unwrap_core,
                               **{n: getattr(geodesic, n) for n in _GEODESIC},
                               **{n: getattr(curves, n) for n in _ARM})
    if getattr(surface, "expression_objects", None) is None:
        raise ValueError(f"{surface.name} has no compiled kernels; use the numpy backend")
    cached = getattr(surface, "_compiled", None)
    if cached is None:
        cached = build(surface)
        surface._compiled = cached
    return cached

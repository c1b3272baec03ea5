"""Kernel backend selection.

Hot loops ship twice: a numba ``@njit`` kernel and a vectorised numpy
path. ``SWIVEL_BACKEND=numpy`` forces the numpy path; it is also used when
numba cannot be imported. Both paths are always importable so tests can
compare them in one process.
"""

import os
import types

try:
    import numba
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba_njit(*args, **kwargs)


def default_backend():
    name = os.environ.get("SWIVEL_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"SWIVEL_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def py_func(kernel):
    """The uncompiled Python body of a kernel (used by the numpy path)."""
    return getattr(kernel, "py_func", kernel)


def python_twins(namespace, *names):
    """Pure-Python copies of the named kernels from a module namespace.

    Every jitted function in ``namespace`` is rebuilt from its Python body
    against a shared copy of the namespace, so kernels that call other
    kernels stay in Python all the way down.
    """
    ns = dict(namespace)
    for key, value in namespace.items():
        f = getattr(value, "py_func", None)
        if f is not None:
            ns[key] = types.FunctionType(f.__code__, ns, f.__name__, f.__defaults__, f.__closure__)
    return tuple(ns[n] for n in names)


def thread_cap():
    """Worker count for embarrassingly parallel work, capped by SWIVEL_THREADS."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("SWIVEL_THREADS")
    if raw is None:
        return cpus
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"SWIVEL_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(cap, cpus))

"""Linear flow on the N-torus and the checks that gate the closed-form winding rates."""

from dataclasses import dataclass
from itertools import product

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_vector(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class TorusState:
    """A point of T^N, every angle reduced to [0, 2pi)."""

    angles: tuple

    def __post_init__(self):
        arr = np.mod(_as_vector(self.angles, "angles"), TWO_PI)
        # np.mod can return exactly 2pi for tiny negative inputs
        arr[arr >= TWO_PI] = 0.0
        object.__setattr__(self, "angles", tuple(float(a) for a in arr))

    def __len__(self):
        return len(self.angles)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.angles, dtype=dtype)


@dataclass(frozen=True)
class FlowSpec:
    """Constant vector field sum_j omega_j d/d(theta_j)."""

    omegas: tuple

    def __post_init__(self):
        arr = _as_vector(self.omegas, "omegas")
        object.__setattr__(self, "omegas", tuple(float(w) for w in arr))

    def __len__(self):
        return len(self.omegas)


def advance(state, flow, t):
    """Flow ``state`` for time ``t`` in closed form: (theta + omega*t) mod 2pi."""
    if len(state) != len(flow):
        raise ValueError(f"dimension mismatch: state has {len(state)} angles, flow has {len(flow)}")
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    theta = np.asarray(state.angles) + np.asarray(flow.omegas) * float(t)
    return TorusState(theta)


def circle_distance(a, b):
    """Distance on the circle between angle arrays ``a`` and ``b``."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class SignedSumVerdict:
    nondegenerate: bool
    witness: tuple = None
    residual: float = None

    def __bool__(self):
        return self.nondegenerate


def _greedy_signs(lengths):
    # largest-first balancing; finds the common degenerate patterns instantly
    order = np.argsort(-lengths, kind="stable")
    signs = np.zeros(len(lengths), dtype=int)
    total = 0.0
    for j in order:
        if total <= 0.0:
            signs[j] = 1
            total += lengths[j]
        else:
            signs[j] = -1
            total -= lengths[j]
    return signs, abs(total)


def _normalise_signs(signs):
    signs = np.asarray(signs, dtype=int)
    if signs[0] < 0:
        signs = -signs
    return tuple(int(s) for s in signs)


def signed_sum_nondegenerate(lengths, tol=None):
    """Check that no signed sum ``sum eps_j l_j`` vanishes.

    This is exactly the condition under which the arm map restricted to
    its zero set is a submersion. ``tol`` defaults to ``1e-9 * sum(l)``.

    Returns
    -------
    SignedSumVerdict
        Truthy when nondegenerate. Otherwise ``witness`` is an offending
        sign vector normalised so that its first entry is +1.
    """
    l = _as_vector(lengths, "lengths")
    if np.any(l <= 0):
        raise ValueError("lengths must be positive")
    n = l.size
    if n > 24:
        raise ValueError("signed-sum enumeration supports at most 24 lengths")
    if tol is None:
        tol = 1e-9 * float(l.sum())
    if tol <= 0:
        raise ValueError("tol must be positive")

    signs, residual = _greedy_signs(l)
    if residual <= tol:
        return SignedSumVerdict(False, _normalise_signs(signs), float(residual))

    # exhaustive: eps_1 = +1 fixed, bit j-1 of the index set => eps_j = -1
    sums = np.array([l[0]])
    for lj in l[1:]:
        sums = np.concatenate((sums + lj, sums - lj))
    absums = np.abs(sums)
    idx = int(np.argmin(absums))
    if absums[idx] > tol:
        return SignedSumVerdict(True, None, float(absums[idx]))
    eps = [1] + [-1 if (idx >> (j - 1)) & 1 else 1 for j in range(1, n)]
    return SignedSumVerdict(False, tuple(eps), float(absums[idx]))


def dominates(lengths):
    """Index of the joint longer than all others combined, or None."""
    l = _as_vector(lengths, "lengths")
    total = l.sum()
    for j, lj in enumerate(l):
        if lj > total - lj:
            return j
    return None


@dataclass(frozen=True)
class RelationVerdict:
    """Outcome of the small-coefficient integer relation scan.

    ``relation is None`` means no relation was found, which is advisory
    only: floats cannot certify rational independence.
    """

    relation: tuple = None
    residual: float = None
    max_coeff: int = 0

    @property
    def found(self):
        return self.relation is not None


def check_rational_independence(omegas, max_coeff=20, tol=1e-9):
    """Scan integer vectors ``k`` with ``|k|_inf <= max_coeff`` for ``|k.omega| <= tol``.

    The reported relation is the one with the smallest sup-norm (ties:
    smallest l1 norm, then lexicographic), normalised so its first
    nonzero entry is positive.
    """
    w = _as_vector(omegas, "omegas")
    n = w.size
    if n > 4:
        raise ValueError("exhaustive relation scan supports at most 4 frequencies")
    max_coeff = int(max_coeff)
    if max_coeff < 1:
        raise ValueError("max_coeff must be >= 1")
    if tol < 0:
        raise ValueError("tol must be nonnegative")

    if n == 1:
        return RelationVerdict(None, None, max_coeff)

    rng = np.arange(-max_coeff, max_coeff + 1)
    # all but the first coordinate as a dense grid; loop over the first
    tail = np.array(list(product(rng, repeat=n - 1)), dtype=np.int64)
    tail_dot = tail @ w[1:]
    best = None
    for k0 in range(0, max_coeff + 1):
        vals = np.abs(k0 * w[0] + tail_dot)
        hits = np.nonzero(vals <= tol)[0]
        for h in hits:
            k = np.concatenate(([k0], tail[h]))
            if not np.any(k):
                continue
            nz = k[np.nonzero(k)[0][0]]
            if nz < 0:
                continue  # the negated vector is visited too
            key = (int(np.max(np.abs(k))), int(np.sum(np.abs(k))), tuple(int(x) for x in k))
            if best is None or key < best[0]:
                best = (key, float(vals[h]))
    if best is None:
        return RelationVerdict(None, None, max_coeff)
    return RelationVerdict(best[0][2], best[1], max_coeff)

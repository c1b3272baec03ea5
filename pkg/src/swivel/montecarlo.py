"""Monte Carlo measures on the torus behind the general-N winding formula.

Samples are drawn in fixed-size chunks, each from its own Philox stream
spawned from the user seed, so estimates depend only on (seed, samples)
and not on how many worker threads ran. Every estimate carries a 99%
normal-approximation half-width.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import njit, resolve_backend, thread_cap
from .errors import DegenerateArmError
from .torus import TWO_PI, signed_sum_nondegenerate

log = logging.getLogger(__name__)

Z99 = 2.5758293035489004
CHUNK = 1 << 16
MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    half_width: float
    seed: int
    samples: int
    rejected: int = 0

    def __float__(self):
        return self.estimate


def _generators(seed, samples):
    n_chunks = max(1, math.ceil(samples / CHUNK))
    seqs = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [samples - CHUNK * (n_chunks - 1)]
    return [(np.random.Generator(np.random.Philox(s)), n) for s, n in zip(seqs, sizes)]


def _reduce(partials, samples, seed, rejected=0):
    total = math.fsum(p[0] for p in partials)
    total_sq = math.fsum(p[1] for p in partials)
    mean = total / samples
    var = max(0.0, (total_sq - samples * mean * mean) / max(1, samples - 1))
    return MonteCarloEstimate(mean, Z99 * math.sqrt(var / samples), int(seed), int(samples), rejected)


def _map_chunks(fn, jobs):
    workers = min(thread_cap(), len(jobs))
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- kernels ------------------------------------------------------------------------------

@njit(nogil=True)
def _enclosure_values_nb(theta, lengths, omegas, out):
    """out[i] = sum_k omegas[k] * [ |Psi(theta_i) - l_k e^{i theta_ik}| < l_k ]."""
    n, m = theta.shape
    for i in range(n):
        x = 0.0
        y = 0.0
        for j in range(m):
            x += lengths[j] * math.cos(theta[i, j])
            y += lengths[j] * math.sin(theta[i, j])
        acc = 0.0
        for k in range(m):
            bx = x - lengths[k] * math.cos(theta[i, k])
            by = y - lengths[k] * math.sin(theta[i, k])
            if bx * bx + by * by < lengths[k] * lengths[k]:
                acc += omegas[k]
        out[i] = acc


def _enclosure_values_np(theta, lengths, omegas, out):
    e = lengths * np.exp(1j * theta)
    rest = e.sum(axis=1, keepdims=True) - e
    out[:] = (np.abs(rest) < lengths) @ omegas


@njit(nogil=True)
def _f_values_nb(theta, lengths, omegas, out_f, out_r):
    """out_f[i] = Re(sum l w e^{i theta} / sum l e^{i theta}), out_r[i] = |Psi|."""
    n, m = theta.shape
    for i in range(n):
        px = 0.0
        py = 0.0
        qx = 0.0
        qy = 0.0
        for j in range(m):
            c = math.cos(theta[i, j])
            s = math.sin(theta[i, j])
            px += lengths[j] * c
            py += lengths[j] * s
            qx += lengths[j] * omegas[j] * c
            qy += lengths[j] * omegas[j] * s
        den = px * px + py * py
        out_r[i] = math.sqrt(den)
        out_f[i] = (qx * px + qy * py) / den if den > 0.0 else 0.0


def _f_values_np(theta, lengths, omegas, out_f, out_r):
    e = np.exp(1j * theta)
    psi = e @ lengths
    num = e @ (lengths * omegas)
    out_r[:] = np.abs(psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        out_f[:] = np.where(out_r > 0, np.real(num * np.conj(psi)) / out_r**2, 0.0)


# -- public API ---------------------------------------------------------------------------

def _validate(lengths, samples):
    l = np.asarray(lengths, dtype=float)
    if l.ndim != 1 or l.size == 0 or np.any(l <= 0):
        raise ValueError("lengths must be a non-empty sequence of positive numbers")
    if int(samples) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    return l, int(samples)


def _require(lengths):
    verdict = signed_sum_nondegenerate(lengths)
    if not verdict:
        raise DegenerateArmError(
            f"precondition failed: signed sum zero for lengths {tuple(float(x) for x in lengths)} "
            f"with signs {verdict.witness}", verdict.witness)


def _enclosure_mean(l, w, samples, seed, backend):
    kernel = _enclosure_values_nb if resolve_backend(backend) == "numba" else _enclosure_values_np

    def run(job):
        gen, n = job
        theta = gen.uniform(0.0, TWO_PI, size=(n, l.size))
        vals = np.empty(n)
        kernel(theta, l, w, vals)
        return float(vals.sum()), float(vals @ vals)

    return _reduce(_map_chunks(run, _generators(seed, samples)), samples, seed)


def measure_qk(lengths, k, samples=1_000_000, seed=0, backend=None):
    """Normalised measure of {theta : |sum_{j != k} l_j e^{i theta_j}| < l_k}.

    ``k`` is a 0-based joint index. theta_k does not enter, so the
    estimate is over the remaining N-1 angles.
    """
    l, samples = _validate(lengths, samples)
    if not 0 <= k < l.size:
        raise IndexError(f"joint index {k} out of range for {l.size} joints")
    _require(l)
    others = np.delete(l, k)
    if others.size == 0:
        # a single joint always encloses the origin
        return MonteCarloEstimate(1.0, 0.0, int(seed), samples)
    # |sum of the others| < l_k  <=>  joint k encloses zero; reuse the kernel with a
    # phantom coordinate for joint k whose own term cancels out of "rest"
    w = np.zeros(l.size)
    w[k] = 1.0
    return _enclosure_mean(l, w, samples, seed, backend)


def hkw_omega_n(lengths, omegas, samples=1_000_000, seed=0, backend=None):
    """sum_k q_k omega_k with all q_k estimated from one shared sample."""
    l, samples = _validate(lengths, samples)
    w = np.asarray(omegas, dtype=float)
    if w.shape != l.shape:
        raise ValueError("lengths and omegas differ in length")
    if l.size < 2:
        raise ValueError("the measure formula needs at least two joints")
    _require(l)
    return _enclosure_mean(l, w, samples, seed, backend)


def space_average_f(lengths, omegas, samples=1_000_000, seed=0, backend=None, r_min_rel=1e-9):
    """Space average of f(theta) = Re(sum l_j w_j e^{i theta_j} / sum l_j e^{i theta_j}).

    Draws with |Psi| < r_min are discarded and redrawn from the same stream.
    f has a 1/|Psi| singularity, so its variance grows slowly with the
    sample count; the half-width is the usual sample-variance estimate.
    """
    l, samples = _validate(lengths, samples)
    w = np.asarray(omegas, dtype=float)
    if w.shape != l.shape:
        raise ValueError("lengths and omegas differ in length")
    if l.size > 1:
        _require(l)
    rmin = r_min_rel * float(l.sum())
    kernel = _f_values_nb if resolve_backend(backend) == "numba" else _f_values_np

    def run(job):
        gen, n = job
        vals = np.empty(n)
        rs = np.empty(n)
        theta = gen.uniform(0.0, TWO_PI, size=(n, l.size))
        kernel(theta, l, w, vals, rs)
        rejected = 0
        bad = np.nonzero(rs < rmin)[0]
        while bad.size:
            rejected += bad.size
            redraw = gen.uniform(0.0, TWO_PI, size=(bad.size, l.size))
            v2 = np.empty(bad.size)
            r2 = np.empty(bad.size)
            kernel(redraw, l, w, v2, r2)
            vals[bad] = v2
            rs[bad] = r2
            bad = bad[r2 < rmin]
        return float(vals.sum()), float(vals @ vals), rejected

    parts = _map_chunks(run, _generators(seed, samples))
    rejected = sum(p[2] for p in parts)
    if rejected:
        log.info("space_average_f: redrew %d samples within r_min of Psi = 0", rejected)
    return _reduce(parts, samples, seed, rejected)


def combined_half_width(*estimates):
    """Half-width for a difference/sum of independent estimates."""
    return math.sqrt(sum(e.half_width**2 for e in estimates))


__all__ = [
    "MonteCarloEstimate", "measure_qk", "hkw_omega_n", "space_average_f",
    "combined_half_width",
]

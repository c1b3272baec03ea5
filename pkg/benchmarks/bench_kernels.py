#!/usr/bin/env python3
"""Numba kernels against the pure-numpy fallback.

Times the hot paths on both backends after a warm-up call (which pays
for JIT compilation or a cache load) and checks that the results agree:

- planar argument unwrap (estimate_omega)
- Monte Carlo torus-measure estimate (hkw_omega_n)
- geodesic exponential map on the Poincare disk
- surface arm simulation on the Poincare disk
- kite averages on a perturbed conformal metric

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import math
import time

from swivel.geodesic import exp_map
from swivel.montecarlo import hkw_omega_n
from swivel.planar import ArmSpec, Convention, estimate_omega
from swivel.surface_arm import average_kite_angles, estimate_omega_surface
from swivel.surfaces import conformal_bump, poincare_disk

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)


def timed(fn, repeat):
    fn()  # warm-up
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(scale):
    arm = ArmSpec((3, 4, 5), (1, SQ2, SQ3))
    disk = poincare_disk()
    rel = ArmSpec((1, 1, 1), (0, 1, SQ2), convention=Convention.RELATIVE)
    bump = conformal_bump(0.1)
    kite_dirs = 4 if scale < 1 else 16

    def exps(backend):
        return sum(exp_map(disk, ((0.1, 0.2), 0.1 * k), 1.0, backend=backend).position[0]
                   for k in range(int(200 * scale)))

    return [
        ("planar unwrap, T=%g" % (2000 * scale),
         lambda b: estimate_omega(arm, 2000 * scale, backend=b).omega_hat),
        ("torus measure, %d samples" % int(2e5 * scale),
         lambda b: hkw_omega_n((1, 1, 1, 2), (1, SQ2, SQ3, 5 ** 0.5), int(2e5 * scale), seed=3, backend=b).estimate),
        ("geodesic exp x%d" % int(200 * scale), exps),
        ("surface arm, T=%g" % (20 * scale),
         lambda b: estimate_omega_surface(disk, (0.0, 0.0), rel, 20 * scale, backend=b).omega_hat),
        ("kite averages, %d directions" % kite_dirs,
         lambda b: average_kite_angles(bump, (0.3, 0.2), (0.3, 0.4, 0.5), grid_size=kite_dirs,
                                       change_tol=math.inf, backend=b).averages[0]),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    scale = 0.25 if args.quick else 1.0

    print(f"{'case':34s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'|diff|':>9s}")
    for name, fn in cases(scale):
        tn, vn = timed(lambda: fn("numba"), args.repeat)
        tp, vp = timed(lambda: fn("numpy"), 1)
        print(f"{name:34s} {tn * 1e3:8.1f}ms {tp * 1e3:8.1f}ms {tp / tn:7.1f}x {abs(vn - vp):9.2g}")


if __name__ == "__main__":
    main()

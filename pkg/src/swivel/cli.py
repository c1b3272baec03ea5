"""Command-line runner: predict, simulate, verify, sweep, render, kite.

Exit codes: 0 pass, 1 verification fail, 2 config or domain error,
3 numerical failure.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, config, render, report
from ._backend import thread_cap
from .errors import ConfigError, DomainError, NumericalError
from .planar import record_run
from .surface_arm import average_kite_angles, predicted_omega_surface, record_surface_run

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
TRAJECTORY_ROWS = 20_000
KITE_TOLERANCE = 1e-8

log = logging.getLogger("swivel")
_UMASK = os.umask(0)
os.umask(_UMASK)


def _u64(text):
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text):
    try:
        val = config.real(text, "value")
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment JSON document")
    common.add_argument("--seed", type=_u64, metavar="U64", help="seed for Monte Carlo estimates")
    common.add_argument("--horizon", type=_positive, metavar="REAL", help="simulation horizon T")
    common.add_argument("--out", metavar="DIR", help="directory for output files")
    common.add_argument("--tolerance", type=_positive, metavar="REAL", help="verification tolerance")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="swivel", description="Swiveling-arm winding-rate experiments.")
    p.add_argument("--version", action="version", version=f"swivel {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("predict", parents=[common], help="every applicable closed-form prediction")
    s = sub.add_parser("simulate", parents=[common], help="simulate and write trajectory.csv")
    s.add_argument("--stride", type=int, help="keep every n-th step (default: about 20000 rows)")
    sub.add_parser("verify", parents=[common], help="compare prediction and simulation")
    w = sub.add_parser("sweep", parents=[common], help="verify along one config axis")
    w.add_argument("--axis", help="dotted config path, e.g. horizon or geometry.params.eps")
    w.add_argument("--values", help="comma-separated values (numbers or constant expressions)")
    r = sub.add_parser("render", parents=[common], help="SVG of a trajectory")
    r.add_argument("--input", metavar="CSV", help="trajectory CSV (default: simulate the config)")
    r.add_argument("--stride", type=int)
    sub.add_parser("kite", parents=[common], help="kite angle table and its averages")
    return p


# -- output ----------------------------------------------------------------------------

def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, exp, name, json_obj=None, csv_text=None):
    """Print the result and, with --out, store it as ``name.{json,csv}``."""
    if args.format == "json":
        text = json.dumps(report._clean(json_obj), indent=2, sort_keys=True) + "\n"
    else:
        text = csv_text
    sys.stdout.write(text)
    out = _out_dir(args, exp)
    if out:
        write_atomic(os.path.join(out, f"{name}.{args.format}"), text)


def _out_dir(args, exp):
    if args.out:
        return args.out
    return exp.out_dir if exp is not None else None


def _g(x):
    return repr(float(x))


def trajectory_csv(t, u, v, r, phi):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(render.COLUMNS)
    for row in zip(t, u, v, r, phi):
        tt = row[0]
        ratio = row[4] / tt if tt > 0 else math.nan
        w.writerow([_g(x) for x in row] + [_g(ratio)])
    return buf.getvalue()


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if x is None else (_g(x) if isinstance(x, float) else x) for x in row])
    return buf.getvalue()


# -- commands --------------------------------------------------------------------------

def _experiment(args, doc=None):
    if doc is None:
        if not args.config:
            raise ConfigError("--config PATH is required")
        doc = config.load(args.config)
    return config.build(doc, seed=args.seed, horizon=args.horizon,
                        tolerance=args.tolerance, out_dir=args.out)


def _auto_stride(exp, requested):
    if requested is not None:
        if requested < 1:
            raise ConfigError("--stride must be at least 1")
        return requested
    if "stride" in exp.doc.get("output", {}):
        return exp.stride
    arm = exp.arm.horizontal() if exp.is_planar else exp.arm.relative()
    dt = exp.step_policy.resolve_dt(max(abs(w) for w in arm.omegas))
    return max(1, math.ceil(exp.horizon / dt / TRAJECTORY_ROWS))


def _record(exp, stride):
    if exp.is_planar:
        traj, est = record_run(exp.arm, exp.horizon, exp.step_policy, exp.backend, stride)
        return (traj.t, traj.x, traj.y, traj.r, traj.phi), est
    traj, est = record_surface_run(exp.surface, exp.base_point, exp.arm, exp.horizon, stride,
                                   exp.step_policy, exp.backend, exp.chart)
    return (traj.t, traj.u, traj.v, traj.r, traj.phi), est


def _estimate_dict(est):
    return {"omega_hat": est.omega_hat, "horizon": est.T, "phi_T": est.phi_T,
            "tail_spread": est.tail_spread, "zero_passages": est.n_zero_passages,
            "evaluations": est.n_evaluations}


def cmd_predict(args):
    exp = _experiment(args)
    rep = report.compare(exp, report.predictions(exp))
    _emit(args, exp, "report", rep.to_dict(), rep.to_csv())
    return EXIT_PASS


def cmd_simulate(args):
    exp = _experiment(args)
    cols, est = _record(exp, _auto_stride(exp, getattr(args, "stride", None)))
    out = _out_dir(args, exp)
    if out:
        write_atomic(os.path.join(out, "trajectory.csv"), trajectory_csv(*cols))
    d = _estimate_dict(est)
    _emit(args, exp, "estimate", d, _rows_csv(list(d), [list(d.values())]))
    return EXIT_PASS


def _verify(exp, tolerance_override=None):
    if exp.verify_mode == "kite":
        preds = report.predictions(exp, include_kite=True)
        ok = {p.label: p for p in preds if p.status == "ok"}
        kite = ok.get(report.KITE)
        const = ok.get(report.CONSTANT) or ok.get(report.TRIANGLE)
        if kite is None or const is None:
            return report.compare(exp, preds)
        tol = tolerance_override
        if tol is None:
            tol = exp.doc.get("tolerance", KITE_TOLERANCE)
        return report.compare(exp, preds, reference=const, tolerance=tol, chosen=kite)
    preds = report.predictions(exp)
    if report.primary(preds) is None:
        return report.compare(exp, preds)
    return report.compare(exp, preds, estimate=report.simulate(exp))


def _verdict_code(rep):
    if rep.verdict is None:
        return EXIT_CONFIG
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_verify(args):
    exp = _experiment(args)
    rep = _verify(exp, args.tolerance)
    _emit(args, exp, "report", rep.to_dict(), rep.to_csv())
    if rep.verdict is None:
        reasons = "; ".join(f"{p.label}: {p.detail}" for p in rep.predictions if p.detail)
        print(f"swivel: no applicable prediction to verify ({reasons or 'none'})", file=sys.stderr)
    return _verdict_code(rep)


def _sweep_values(args, exp):
    spec = exp.sweep or {}
    axis = args.axis or spec.get("axis")
    if args.values is not None:
        values = []
        for item in args.values.split(","):
            item = item.strip()
            try:
                values.append(float(item))
            except ValueError:
                values.append(item)
    else:
        values = spec.get("values")
    if not axis or not values:
        raise ConfigError("sweep needs an axis and values (--axis/--values or the config's sweep)")
    return axis, values


def cmd_sweep(args):
    if not args.config:
        raise ConfigError("--config PATH is required")
    doc = config.load(args.config)
    base = _experiment(args, doc)
    axis, values = _sweep_values(args, base)
    points = [config.with_value(doc, axis, v) for v in values]
    # validate everything up front so a bad value fails before any work
    exps = [_experiment(args, d) for d in points]

    def run(exp):
        try:
            return _verify(exp, args.tolerance), None
        except (ConfigError, DomainError) as exc:
            return None, (EXIT_CONFIG, str(exc))
        except NumericalError as exc:
            return None, (EXIT_NUMERICAL, str(exc))

    workers = min(thread_cap(), len(exps))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, exps))
    else:
        results = [run(e) for e in exps]

    rows, codes, records = [], [], []
    for value, (rep, err) in zip(values, results):
        shown = value if isinstance(value, str) else float(value)
        if err is not None:
            codes.append(err[0])
            rows.append([shown, None, None, None, "error"])
            records.append({"value": shown, "error": err[1]})
            continue
        codes.append(_verdict_code(rep))
        rows.append([shown, rep.predicted, rep.empirical, rep.difference, rep.verdict])
        records.append({"value": shown, "report": rep.to_dict()})
    text = _rows_csv(["value", "predicted", "empirical", "diff", "verdict"], rows)
    if args.format == "json":
        _emit(args, base, "sweep", {"axis": axis, "points": records})
    else:
        _emit(args, base, "sweep", csv_text=text)
    out = _out_dir(args, base)
    if out and args.format == "json":
        write_atomic(os.path.join(out, "sweep.csv"), text)
    return max(codes, key=lambda c: (c != EXIT_PASS, c)) if codes else EXIT_PASS


def cmd_render(args):
    exp = None
    if args.input:
        traj = render.read_trajectory(args.input)
        title = os.path.basename(args.input)
    else:
        exp = _experiment(args)
        cols, _ = _record(exp, _auto_stride(exp, args.stride))
        traj = dict(zip(render.COLUMNS, cols))
        with np.errstate(divide="ignore", invalid="ignore"):
            traj["phi_over_t"] = np.where(traj["t"] > 0, traj["phi"] / traj["t"], np.nan)
        title = exp.name
    svg = render.svg(traj, title)
    out = _out_dir(args, exp)
    if out:
        write_atomic(os.path.join(out, "render.svg"), svg)
    else:
        sys.stdout.write(svg)
    return EXIT_PASS


def cmd_kite(args):
    exp = _experiment(args)
    if exp.arm.n != 3:
        raise ConfigError("kites are defined for three-joint arms")
    surface = exp.surface
    if surface is None:
        surface = config._surface({"type": "euclidean"})
    kp = exp.kite
    table = average_kite_angles(surface, exp.base_point, exp.arm.lengths,
                                grid_size=kp.get("grid_size", 256), tol=kp.get("tol", 1e-10),
                                change_tol=kp.get("change_tol", 1e-8), backend=exp.backend)
    header = ["phi", "alpha1_plus", "alpha2_plus", "alpha3_plus",
              "alpha1_minus", "alpha2_minus", "alpha3_minus"]
    rows = [[float(ph), *map(float, ap), *map(float, am)]
            for ph, ap, am in zip(table.phi_grid, table.angles_plus, table.angles_minus)]
    out = _out_dir(args, exp)
    if out:
        write_atomic(os.path.join(out, "kite.csv"), _rows_csv(header, rows))
    omega = predicted_omega_surface(table, exp.arm.relative().omegas)
    d = {"averages": list(table.averages), "averages_plus": list(table.averages_plus),
         "averages_minus": list(table.averages_minus), "grid_size": table.grid_size,
         "max_closure_residual": table.max_residual, "quadrature_change": table.refinement_change,
         "predicted_omega": omega}
    flat = {k: (";".join(_g(x) for x in v) if isinstance(v, list) else v) for k, v in d.items()}
    _emit(args, exp, "kite_summary", d, _rows_csv(list(flat), [list(flat.values())]))
    return EXIT_PASS


COMMANDS = {"predict": cmd_predict, "simulate": cmd_simulate, "verify": cmd_verify,
            "sweep": cmd_sweep, "render": cmd_render, "kite": cmd_kite}


def main(argv=None):
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="swivel: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"swivel: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"swivel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"swivel: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Closed-form predictions for an experiment and the prediction-vs-simulation report."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

from .errors import DegenerateArmError, DomainError, NumericalError
from .montecarlo import hkw_omega_n
from .planar import estimate_omega, triangle_omega_euclidean
from .surface_arm import average_kite_angles, estimate_omega_surface, predicted_omega_surface
from .torus import check_rational_independence, dominates
from .triangles import Curvature, predicted_omega_constant

# formula labels, also the order in which a primary prediction is picked
DOMINANT = "dominant interval"
EQUAL_PAIR = "equal-length pair"
TRIANGLE = "triangle-angle formula"
CONSTANT = "constant-curvature formula"
KITE = "kite-average formula"
MEASURE = "torus-measure formula"
SINGLE = "single joint"
PRIORITY = (DOMINANT, EQUAL_PAIR, TRIANGLE, CONSTANT, KITE, MEASURE, SINGLE)


@dataclass
class Prediction:
    label: str
    status: str  # "ok", "refused" or "skipped"
    value: float = None
    half_width: float = None
    detail: str = ""
    extras: dict = field(default_factory=dict)


def _refused(label, exc):
    extras = {}
    if isinstance(exc, DegenerateArmError):
        extras["witness"] = list(exc.witness)
    return Prediction(label, "refused", detail=str(exc), extras=extras)


def _curvature_of(exp):
    if exp.geometry == "hyperbolic":
        return Curvature.HYPERBOLIC
    if exp.geometry == "sphere":
        return Curvature.SPHERICAL
    if exp.geometry == "euclidean":
        return Curvature.EUCLIDEAN
    return getattr(exp.surface, "curvature", None)


def _kite_prediction(exp, omegas):
    kp = exp.kite
    try:
        table = average_kite_angles(exp.surface, exp.base_point, exp.arm.lengths,
                                    grid_size=kp.get("grid_size", 256), tol=kp.get("tol", 1e-10),
                                    change_tol=kp.get("change_tol", 1e-8), backend=exp.backend)
    except (DomainError, NumericalError) as exc:
        return _refused(KITE, exc), None
    value = predicted_omega_surface(table, omegas)
    return Prediction(KITE, "ok", value, extras={
        "averaged_angles": list(table.averages), "grid_size": table.grid_size,
        "quadrature_change": table.refinement_change, "max_closure_residual": table.max_residual,
    }), table


def predictions(exp, include_kite=None):
    """Every closed form that applies to the experiment; refusals are recorded, not raised."""
    arm = exp.arm
    h = arm.horizontal()
    rel = arm.relative()
    out = []
    n = arm.n
    curv = _curvature_of(exp)

    if exp.geometry == "euclidean":
        if n == 1:
            out.append(Prediction(SINGLE, "ok", h.omegas[0]))
        j = dominates(h.lengths)
        if j is not None and n > 1:
            out.append(Prediction(DOMINANT, "ok", h.omegas[j], extras={"joint": j}))
        if n == 2 and h.lengths[0] == h.lengths[1]:
            out.append(Prediction(EQUAL_PAIR, "ok", 0.5 * (h.omegas[0] + h.omegas[1])))
        if n == 3:
            try:
                tp = triangle_omega_euclidean(h.lengths, h.omegas)
                out.append(Prediction(TRIANGLE, "ok", tp.predicted_omega,
                                      extras={"angles": list(tp.angles), "coefficients": list(tp.coefficients)}))
            except DomainError as exc:
                out.append(_refused(TRIANGLE, exc))
        if n >= 2:
            if exp.seed is None:
                out.append(Prediction(MEASURE, "skipped", detail="needs a seed (--seed or monte_carlo.seed)"))
            else:
                try:
                    mc = hkw_omega_n(h.lengths, h.omegas, exp.samples, exp.seed, exp.backend)
                    out.append(Prediction(MEASURE, "ok", mc.estimate, mc.half_width,
                                          extras={"seed": mc.seed, "samples": mc.samples}))
                except DomainError as exc:
                    out.append(_refused(MEASURE, exc))
        if include_kite and n == 3 and exp.surface is not None:
            out.append(_kite_prediction(exp, rel.omegas)[0])
        return out

    if n != 3:
        out.append(Prediction(CONSTANT if curv is not None else KITE, "refused",
                              detail="surface formulas are stated for three joints"))
        return out
    if curv is not None:
        try:
            tp = predicted_omega_constant(curv, rel.lengths, rel.omegas)
            out.append(Prediction(CONSTANT, "ok", tp.predicted_omega, extras={
                "angles": list(tp.angles), "area": tp.area, "area_form": tp.area_form_omega}))
        except DomainError as exc:
            out.append(_refused(CONSTANT, exc))
    if include_kite or (include_kite is None and curv is None):
        out.append(_kite_prediction(exp, rel.omegas)[0])
    return out


def primary(preds):
    ok = {p.label: p for p in preds if p.status == "ok"}
    for label in PRIORITY:
        if label in ok:
            return ok[label]
    return None


def simulate(exp):
    if exp.is_planar:
        return estimate_omega(exp.arm, exp.horizon, exp.step_policy, exp.backend)
    return estimate_omega_surface(exp.surface, exp.base_point, exp.arm, exp.horizon,
                                  exp.step_policy, exp.backend, exp.chart)


def independence_warnings(exp):
    w = exp.arm.horizontal().omegas if exp.is_planar else exp.arm.relative().omegas
    nonzero = [x for x in w if x != 0.0]
    if len(nonzero) < 2 or len(nonzero) > 4:
        return []
    verdict = check_rational_independence(nonzero, max_coeff=20)
    if verdict.found:
        return [f"angular velocities satisfy the integer relation {list(verdict.relation)}; "
                "the asymptotic velocity may depend on the initial phases"]
    return []


@dataclass
class ComparisonReport:
    name: str
    geometry: str
    predictions: list
    primary_label: str = None
    predicted: float = None
    empirical: float = None
    difference: float = None
    tolerance: float = None
    verdict: str = None
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        d = asdict(self)
        d["predictions"] = [_clean(asdict(p)) for p in self.predictions]
        return _clean(d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "label", "status", "value", "half_width", "detail"])
        for p in self.predictions:
            w.writerow(["prediction", p.label, p.status, _num(p.value), _num(p.half_width), p.detail])
        if self.empirical is not None:
            w.writerow(["empirical", self.diagnostics.get("reference", "phi(T)/T"), "ok", _num(self.empirical),
                        _num(self.diagnostics.get("tail_spread")), ""])
        if self.verdict is not None:
            w.writerow(["comparison", self.primary_label, self.verdict, _num(self.difference),
                        _num(self.tolerance), ""])
        for msg in self.warnings:
            w.writerow(["warning", "", "", "", "", msg])
        return buf.getvalue()


def _num(x):
    return "" if x is None else repr(float(x))


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def compare(exp, preds, estimate=None, reference=None, tolerance=None, chosen=None):
    """Fill a report comparing the primary prediction (or ``chosen``) with ``estimate`` or ``reference``."""
    rep = ComparisonReport(exp.name, exp.geometry, preds, warnings=independence_warnings(exp))
    best = chosen if chosen is not None else primary(preds)
    if best is None:
        return rep
    rep.primary_label = best.label
    rep.predicted = best.value
    tol = exp.tolerance if tolerance is None else tolerance
    if best.half_width is not None:
        tol = max(tol, best.half_width)
        rep.diagnostics["ci_half_width"] = best.half_width
    rep.tolerance = tol
    if estimate is not None:
        rep.empirical = estimate.omega_hat
        rep.diagnostics.update(horizon=estimate.T, tail_spread=estimate.tail_spread,
                               zero_passages=estimate.n_zero_passages)
    elif reference is not None:
        rep.empirical = reference.value
        rep.diagnostics["reference"] = reference.label
    else:
        return rep
    rep.difference = abs(rep.predicted - rep.empirical)
    rep.verdict = "pass" if rep.difference <= tol else "fail"
    return rep

"""Experiment configuration: one JSON document validated against the shipped schema."""

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import ConfigError
from .expr import Expression, ExpressionError
from .planar import ArmSpec, Convention
from .surfaces import ChartDomain, builtin, from_expressions, poincare_disk, sphere
from .unwrap import StepPolicy

DEFAULT_TOLERANCE = {"euclidean": 5e-3, "constant": 1e-2, "surface": 2e-2}
DEFAULT_HORIZON = 1e5
DEFAULT_SAMPLES = 1_000_000


def schema():
    text = resources.files("swivel").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def real(value, where="value"):
    """A JSON number, or a constant expression string such as "2^0.5"."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a real number")
    if isinstance(value, (int, float)):
        out = float(value)
    else:
        try:
            e = Expression(value)
        except ExpressionError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if _has_vars(e.tree):
            raise ConfigError(f"{where}: constant expected, {value!r} mentions u or v")
        out = float(e(0.0, 0.0))
    if not math.isfinite(out):
        raise ConfigError(f"{where}: {value!r} is not finite")
    return out


def _has_vars(node):
    if node[0] == "var":
        return True
    return any(isinstance(c, tuple) and _has_vars(c) for c in node[1:])


@dataclass
class Experiment:
    doc: dict
    geometry: str
    surface: object
    arm: ArmSpec
    base_point: tuple
    horizon: float
    tolerance: float
    seed: int
    samples: int
    backend: str
    chart: str
    step_policy: StepPolicy
    kite: dict = field(default_factory=dict)
    verify_mode: str = "simulation"
    sweep: dict = None
    out_dir: str = None
    stride: int = 1
    pipeline: str = "planar"

    @property
    def is_planar(self):
        return self.geometry == "euclidean" and self.pipeline == "planar"

    @property
    def name(self):
        return self.doc.get("name", "experiment")


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return doc


def validate(doc):
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def _surface(geo):
    kind = geo["type"]
    params = dict(geo.get("params", {}))
    if kind == "hyperbolic":
        return poincare_disk(**params) if params else poincare_disk()
    if kind == "sphere":
        return sphere(**params) if params else sphere()
    if kind == "euclidean":
        return builtin("euclidean", **params)
    if "metric" in geo:
        m = geo["metric"]
        dom = m.get("domain")
        domain = None
        if dom:
            if "lower" in dom:
                domain = ChartDomain("rect", lower=tuple(real(x) for x in dom["lower"]),
                                     upper=tuple(real(x) for x in dom["upper"]))
            else:
                domain = ChartDomain("disk", center=tuple(real(x) for x in dom.get("center", (0, 0))),
                                     radius=real(dom.get("radius", math.inf)))
        return from_expressions(m["g11"], m["g12"], m["g22"], domain=domain,
                                analytic=m.get("analytic_partials", True), h_g=m.get("h_g"))
    if "name" not in geo:
        raise ConfigError("geometry type 'surface' needs a 'name' or a 'metric'")
    for key in ("center",):
        if key in params:
            params[key] = tuple(real(x) for x in params[key])
    for key, val in list(params.items()):
        if key not in ("center", "chart"):
            params[key] = real(val, f"geometry.params.{key}")
    return builtin(geo["name"], **params)


def build(doc, seed=None, horizon=None, tolerance=None, out_dir=None):
    """Validate ``doc`` and turn it into an Experiment; CLI overrides win."""
    validate(doc)
    geo = doc["geometry"]
    kind = geo["type"]
    pipeline = geo.get("pipeline", "planar")
    if pipeline == "surface" and kind != "euclidean":
        raise ConfigError("geometry.pipeline applies to euclidean geometry only")
    surface = None if (kind == "euclidean" and pipeline == "planar") else _surface(geo)

    a = doc["arm"]
    lengths = [real(x, "arm.lengths") for x in a["lengths"]]
    omegas = [real(x, "arm.omegas") for x in a["omegas"]]
    phases = [real(x, "arm.initial_phases") for x in a.get("initial_phases", [0.0] * len(lengths))]
    default_conv = "horizontal" if kind == "euclidean" else "relative"
    try:
        arm = ArmSpec(lengths, omegas, phases, Convention(a.get("convention", default_conv)))
    except ValueError as exc:
        raise ConfigError(f"arm: {exc}") from None

    if kind == "euclidean":
        tol_default = DEFAULT_TOLERANCE["euclidean"]
    elif kind in ("sphere", "hyperbolic") or getattr(surface, "curvature", None) is not None:
        tol_default = DEFAULT_TOLERANCE["constant"]
    else:
        tol_default = DEFAULT_TOLERANCE["surface"]

    mc = doc.get("monte_carlo", {})
    seed_val = seed if seed is not None else mc.get("seed", doc.get("seed"))
    hz = horizon if horizon is not None else real(doc.get("horizon", DEFAULT_HORIZON), "horizon")
    if not hz > 0:
        raise ConfigError("horizon must be positive")
    tol = tolerance if tolerance is not None else doc.get("tolerance", tol_default)
    if not tol > 0:
        raise ConfigError("tolerance must be positive")
    sp = doc.get("step_policy", {})
    out = doc.get("output", {})
    return Experiment(
        doc=doc,
        geometry=kind if kind != "surface" else "surface",
        surface=surface,
        arm=arm,
        base_point=tuple(real(x, "base_point") for x in doc.get("base_point", (0.0, 0.0))),
        horizon=float(hz),
        tolerance=float(tol),
        seed=None if seed_val is None else int(seed_val),
        samples=int(mc.get("samples", DEFAULT_SAMPLES)),
        backend=doc.get("backend"),
        chart=doc.get("chart", "frame"),
        step_policy=StepPolicy(**sp),
        kite=dict(doc.get("kite", {})),
        verify_mode=doc.get("verify", {}).get("mode", "simulation"),
        sweep=doc.get("sweep"),
        out_dir=out_dir or out.get("dir"),
        stride=int(out.get("stride", 1)),
        pipeline=pipeline,
    )


def with_value(doc, path, value):
    """Copy of ``doc`` with the dotted ``path`` (list indices allowed) set to ``value``."""
    new = copy.deepcopy(doc)
    keys = path.split(".")
    node = new
    try:
        for k in keys[:-1]:
            node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError):
        raise ConfigError(f"sweep axis {path!r} does not address a value in the config") from None
    return new

import attr
import copy
import importlib
import logging
import math
import os
import typing
import numpy as np
from .base import Family, Form, GridPolicy, RhsForm
from .coefficients import Coefficient
from .exceptions import ConfigError, ShiftError, TimeScaleError
from .halanay import S_FLOOR, HalanayProblem
from .shifts import DelaySpec, builtin_shift
from .simulate import HistoryFunction, RhsSpec
from .timescale import (
    ArithmeticGrid,
    DenseInterval,
    ExplicitPoints,
    GeometricGrid,
    SqrtGrid,
    TimeScale,
)
from .utils import doc_digest, load_docs, parse_source, read_table

"""
Format of a time scale document:

{"label": "Z", "segments": [
    {"kind": "dense", "a": <num>, "b": <num>|"inf"}
    {"kind": "arith", "start": <num>, "step": <num>, "count": <int>|"inf"}
    {"kind": "geom", "q": <num>, "nmin": <int>, "nmax": <int>|"inf"}
    {"kind": "sqrtN", "nmin": <int>, "nmax": <int>|"inf"}
    {"kind": "points", "values": [<num>, ...]}
]}

Format of a problem document:

{"shift": {"family": "translation"|"scaling"|"sqrt"|"real-scaling"|"custom", "t0": <num>},
 "delays": [<num>, ...],
 "form": "sum"|"sup"|"product"|"max",
 "p": <num>|"const:<num>"|"table:<file>",
 "q": [<coefficient>, ...],
 "ell": <num>, "alpha": [<num>, ...], "K": <num>, "tau": <num>,
 "rhs": {"form": "custom", "forcing": "<module>:<name>", "dominated_by": "sum"|"product",
         "state_range": [<num>, <num>]}}
"""

logger = logging.getLogger(__name__)

FAMILIES = {
    "translation": Family.Translation,
    "scaling": Family.Scaling,
    "sqrt": Family.SqrtPythagorean,
    "real-scaling": Family.RealScaling,
    "custom": Family.Custom,
}
FORMS = {
    "sum": Form.SumPower,
    "sup": Form.SupForm,
    "product": Form.ProductForm,
    "max": Form.MaxForm,
}


def _child(pointer, key):
    return f"{pointer}/{key}"


def _get(doc, key, pointer, default=attr.NOTHING):
    if not isinstance(doc, dict):
        raise ConfigError(pointer, "expected an object")
    if key not in doc:
        if default is attr.NOTHING:
            raise ConfigError(_child(pointer, key), "required field is missing")
        return default
    return doc[key]


def _number(value, pointer, integer=False):
    if value in ("inf", "Infinity", None):
        return None if integer else math.inf
    try:
        return int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(pointer, f"expected a number, got {value!r}")


def _segment(doc, pointer):
    kind = _get(doc, "kind", pointer)
    try:
        if kind == "dense":
            return DenseInterval(_number(_get(doc, "a", pointer), _child(pointer, "a")),
                                 _number(doc.get("b", "inf"), _child(pointer, "b")))
        if kind == "arith":
            return ArithmeticGrid(
                _number(_get(doc, "start", pointer), _child(pointer, "start")),
                _number(_get(doc, "step", pointer), _child(pointer, "step")),
                _number(doc.get("count", "inf"), _child(pointer, "count"), integer=True),
            )
        if kind == "geom":
            nmin = doc.get("nmin")
            return GeometricGrid(
                _number(_get(doc, "q", pointer), _child(pointer, "q")),
                None if nmin is None else _number(nmin, _child(pointer, "nmin"), integer=True),
                _number(doc.get("nmax", "inf"), _child(pointer, "nmax"), integer=True),
            )
        if kind == "sqrtN":
            return SqrtGrid(
                _number(doc.get("nmin", 0), _child(pointer, "nmin"), integer=True),
                _number(doc.get("nmax", "inf"), _child(pointer, "nmax"), integer=True),
            )
        if kind == "points":
            values = _get(doc, "values", pointer)
            return ExplicitPoints([_number(v, _child(_child(pointer, "values"), i))
                                   for i, v in enumerate(values)])
    except TimeScaleError as e:
        raise ConfigError(pointer, str(e))
    raise ConfigError(_child(pointer, "kind"), f"unknown segment kind {kind!r}")


def scale_from_doc(doc, rtol=1e-12):
    segments = _get(doc, "segments", "")
    if not isinstance(segments, list) or not segments:
        raise ConfigError("/segments", "expected a non-empty list")
    parts = [_segment(s, f"/segments/{i}") for i, s in enumerate(segments)]
    positive = all(isinstance(s, (GeometricGrid, SqrtGrid)) for s in parts)
    default_lower = 0.0 if positive else -math.inf
    lower = _number(doc.get("t_star_lower", default_lower), "/t_star_lower")
    try:
        return TimeScale(parts, label=doc.get("label", ""), t_star_lower=lower, rtol=rtol)
    except TimeScaleError as e:
        raise ConfigError("/segments", str(e))


def import_object(path, pointer):
    """ resolve "package.module:name" """
    module, sep, name = str(path).partition(":")
    if not sep:
        raise ConfigError(pointer, f"expected module:name, got {path!r}")
    try:
        return getattr(importlib.import_module(module), name)
    except (ImportError, AttributeError) as e:
        raise ConfigError(pointer, str(e))


def delay_spec_from_doc(doc, ts):
    shift_doc = _get(doc, "shift", "")
    name = _get(shift_doc, "family", "/shift")
    if name not in FAMILIES:
        raise ConfigError("/shift/family", f"unknown family {name!r}")
    family = FAMILIES[name]
    t0 = shift_doc.get("t0")
    params = {}
    if family is Family.Custom:
        for key in ("delta_minus", "delta_plus", "t_star"):
            if key in shift_doc:
                params[key] = import_object(shift_doc[key], f"/shift/{key}")
    try:
        shift = builtin_shift(family, ts, t0, params)
    except ShiftError as e:
        raise ConfigError("/shift", str(e))
    delays = [_number(h, f"/delays/{i}") for i, h in enumerate(_get(doc, "delays", ""))]
    try:
        return DelaySpec(shift, delays)
    except ShiftError as e:
        raise ConfigError("/delays", str(e))


def coefficient_from_doc(value, pointer, base_dir=""):
    try:
        kind, arg = parse_source(value)
    except ValueError:
        raise ConfigError(pointer, f"expected const:<num> or table:<file>, got {value!r}")
    if kind == "const":
        return Coefficient.const(arg)
    if kind == "table":
        path = os.path.join(base_dir, arg)
        try:
            times, values = read_table(path)
        except (OSError, ValueError) as e:
            raise ConfigError(pointer, str(e))
        return Coefficient.table(times, values, label=f"table:{arg}")
    raise ConfigError(pointer, f"unknown coefficient source {kind!r}")


def history_from_source(value, base_dir=""):
    try:
        kind, arg = parse_source(value)
    except ValueError:
        raise ConfigError("/history", f"expected const:<num> or csv:<file>, got {value!r}")
    if kind == "const":
        return HistoryFunction.constant(arg)
    if kind == "csv":
        try:
            times, values = read_table(os.path.join(base_dir, arg))
        except (OSError, ValueError) as e:
            raise ConfigError("/history", str(e))
        return HistoryFunction.tabulated(times, values, label=f"csv:{arg}")
    raise ConfigError("/history", f"unknown history source {kind!r}")


def problem_from_doc(doc, ts, base_dir=""):
    """ (HalanayProblem, RhsSpec) described by a problem document """
    spec = delay_spec_from_doc(doc, ts)
    name = doc.get("form", "sum")
    if name not in FORMS:
        raise ConfigError("/form", f"unknown form {name!r}")
    form = FORMS[name]
    p = coefficient_from_doc(_get(doc, "p", ""), "/p", base_dir)
    q_doc = _get(doc, "q", "")
    if not isinstance(q_doc, list):
        q_doc = [q_doc]
    if form is Form.SumPower and len(q_doc) == spec.r:
        # q given for the delayed terms only
        q_doc = [0.0] + q_doc
    expected = 1 if form.uses_sup() else spec.r + 1
    if len(q_doc) != expected:
        raise ConfigError("/q", f"{name} form needs {expected} coefficients, got {len(q_doc)}")
    alpha = [_number(a, f"/alpha/{i}") for i, a in enumerate(doc.get("alpha", []))]
    if form is Form.ProductForm and len(alpha) != spec.r + 1:
        raise ConfigError("/alpha", f"product form needs {spec.r + 1} exponents")
    q = [coefficient_from_doc(v, f"/q/{i}", base_dir) for i, v in enumerate(q_doc)]
    tau = doc.get("tau")
    try:
        problem = HalanayProblem(
            spec,
            form,
            p,
            q,
            ell=_number(doc.get("ell", 1.0), "/ell"),
            alpha=alpha,
            Kconst=_number(doc.get("K", 1.0), "/K"),
            tau=None if tau is None else _number(tau, "/tau"),
        )
    except ValueError as e:
        raise ConfigError("", str(e))
    rhs_doc = doc.get("rhs")
    if rhs_doc is None:
        return problem, RhsSpec.for_problem(problem)
    if _get(rhs_doc, "form", "/rhs") != "custom":
        raise ConfigError("/rhs/form", "only custom right-hand sides are described explicitly")
    bound = _get(rhs_doc, "dominated_by", "/rhs")
    if bound not in ("sum", "product"):
        raise ConfigError("/rhs/dominated_by", f"expected sum or product, got {bound!r}")
    rhs = RhsSpec(
        RhsForm.Custom,
        problem.p,
        problem.q,
        ell=problem.ell,
        alpha=list(problem.alpha),
        forcing=import_object(_get(rhs_doc, "forcing", "/rhs"), "/rhs/forcing"),
        dominated_by=FORMS[bound],
        state_range=tuple(rhs_doc.get("state_range", (-2.0, 2.0))),
    )
    return problem, rhs


def set_pointer(doc, pointer, value):
    """ set the field a JSON pointer names, in place """
    parts = [p.replace("~1", "/").replace("~0", "~") for p in pointer.lstrip("/").split("/")]
    target = doc
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(target, list):
            try:
                idx = int(part)
                if last:
                    target[idx] = value
                else:
                    target = target[idx]
            except (ValueError, IndexError):
                raise ConfigError(pointer, f"no list element {part!r}")
        elif isinstance(target, dict):
            if last:
                target[part] = value
            elif part not in target:
                raise ConfigError(pointer, f"no field {part!r}")
            else:
                target = target[part]
        else:
            raise ConfigError(pointer, "path runs through a scalar")
    return doc


def param_values(spec, pointer):
    """ a list of values, or {"start", "stop", "step"} expanded inclusively """
    if isinstance(spec, list):
        return [float(v) for v in spec]
    start = _number(_get(spec, "start", pointer), _child(pointer, "start"))
    stop = _number(_get(spec, "stop", pointer), _child(pointer, "stop"))
    step = _number(_get(spec, "step", pointer), _child(pointer, "step"))
    if step <= 0 or stop < start:
        raise ConfigError(pointer, "range needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [float(v) for v in np.round(start + step * np.arange(n), 12)]


def _doc_or_file(value, base_dir, pointer):
    if isinstance(value, dict):
        return value, base_dir
    if isinstance(value, str):
        path = os.path.join(base_dir, value)
        try:
            return load_docs(path), os.path.dirname(path)
        except OSError as e:
            raise ConfigError(pointer, str(e))
    raise ConfigError(pointer, "expected an object or a file name")


@attr.s(auto_attribs=True)
class RunConfig:
    scale_doc: dict
    problem_doc: typing.Optional[dict] = None
    history: typing.Any = "const:1.0"
    policy: GridPolicy = attr.Factory(GridPolicy)
    tol: float = 1e-10
    root_step: float = 0.1
    floor: float = S_FLOOR
    base_dir: str = ""
    history_dir: str = ""

    @classmethod
    def load(cls, scale_path, problem_path=None, history="const:1.0", settings=None, **kwargs):
        scale_doc = load_docs(scale_path)
        problem_doc = load_docs(problem_path) if problem_path else None
        base_dir = os.path.dirname(problem_path or scale_path)
        if settings is not None:
            kwargs.setdefault("policy", settings.policy)
            kwargs.setdefault("tol", settings.root_tol)
            kwargs.setdefault("root_step", settings.root_step)
            kwargs.setdefault("floor", settings.s_floor)
        return cls(scale_doc, problem_doc, history, base_dir=base_dir, **kwargs)

    @property
    def scale(self):
        return scale_from_doc(self.scale_doc, self.policy.membership_rtol)

    def build(self):
        """ (time scale, problem, rhs, history) with cross references checked """
        ts = self.scale
        if self.problem_doc is None:
            raise ConfigError("/", "a problem document is required")
        problem, rhs = problem_from_doc(self.problem_doc, ts, self.base_dir)
        history = history_from_source(self.history, self.history_dir)
        self.check_references(problem, history)
        logger.debug("built %s problem on %s, history %s", problem.form.name,
                     ts.label or "time scale", history.label)
        return ts, problem, rhs, history

    def check_references(self, problem, history):
        shift = problem.spec.shift
        start = problem.window_start
        if not shift.admissible(start):
            raise ConfigError("/delays", f"history window starts at {start}, outside T*")
        for i, h in enumerate(problem.spec.delays):
            if h < shift.t0:
                raise ConfigError(f"/delays/{i}", f"delay {h} is below t0 = {shift.t0}")
        coefficients = [("/p", problem.p)] + [(f"/q/{i}", q) for i, q in enumerate(problem.q)]
        for pointer, coef in coefficients:
            if coef.times and coef.times[0] > start + 1e-12 * max(1.0, abs(start)):
                raise ConfigError(pointer, f"table starts at {coef.times[0]}, after {start}")
        if history.times and history.times[0] > start + 1e-12 * max(1.0, abs(start)):
            raise ConfigError("/history", f"table starts at {history.times[0]}, after {start}")

    @property
    def digest(self):
        return doc_digest(self.scale_doc, self.problem_doc, self.history, attr.asdict(self.policy),
                          self.tol, self.root_step, self.floor)


@attr.s(auto_attribs=True)
class SweepConfig:
    run: RunConfig
    grid: typing.Dict[str, typing.List[float]]
    horizon: float
    x: str
    y: str

    @classmethod
    def load(cls, path, settings=None):
        doc = load_docs(path)
        base_dir = os.path.dirname(path)
        scale_doc, _ = _doc_or_file(_get(doc, "scale", ""), base_dir, "/scale")
        problem_doc, problem_dir = _doc_or_file(_get(doc, "problem", ""), base_dir, "/problem")
        params = _get(doc, "params", "")
        if not isinstance(params, dict) or not params:
            raise ConfigError("/params", "expected a non-empty object of JSON pointers")
        grid = {name: param_values(values, f"/params/{name.replace('/', '~1')}")
                for name, values in params.items()}
        kwargs = {}
        if settings is not None:
            kwargs = dict(policy=settings.policy, tol=settings.root_tol,
                          root_step=settings.root_step, floor=settings.s_floor)
        run = RunConfig(scale_doc, problem_doc, doc.get("history", "const:1.0"),
                        base_dir=problem_dir, history_dir=base_dir, **kwargs)
        names = list(grid)
        return cls(run, grid, _number(_get(doc, "horizon", ""), "/horizon"),
                   doc.get("x", names[0]), doc.get("y", names[-1]))

    def template(self, **params):
        """ (problem, rhs) with the swept fields of the problem document replaced """
        doc = copy.deepcopy(self.run.problem_doc)
        for pointer, value in params.items():
            set_pointer(doc, pointer, value)
        return problem_from_doc(doc, self.run.scale, self.run.base_dir)

    def history(self):
        return history_from_source(self.run.history, self.run.history_dir)

    @property
    def digest(self):
        return doc_digest(self.run.digest, self.grid, self.horizon)

"""
Shift operators delta_-(s, t), delta_+(s, t) on a time scale and the delay
functions built from them.
"""
import attr
import logging
import math
import typing
import numpy as np
from .base import Family, GridPolicy, Report, close
from .exceptions import (
    IncompatibleFamily,
    InvalidDelaySpec,
    OutOfDomain,
    TimeScaleError,
    UndefinedJump,
)
from .timescale import (
    ArithmeticGrid,
    DenseInterval,
    GeometricGrid,
    SqrtGrid,
    delta_derivative,
    is_right_scattered,
    iterate_points,
    rho,
    sample_points,
    sigma,
)

logger = logging.getLogger(__name__)

RTOL = 1e-10


@attr.s(auto_attribs=True, frozen=True)
class ShiftSystem:
    ts: typing.Any
    t0: float
    delta_minus: typing.Callable[[float, float], float]
    delta_plus: typing.Callable[[float, float], float]
    family: Family = Family.Custom
    t_star: typing.Optional[typing.Callable[[float], bool]] = None

    def in_t_star(self, t):
        """ membership in the domain T* of the shifts """
        if self.t_star is not None:
            return bool(self.t_star(t)) and self.ts.contains(t)
        return t >= self.ts.t_star_lower and self.ts.contains(t)

    def _snap(self, value):
        if value is None or not math.isfinite(value):
            return None
        if self.ts.contains(value):
            return self.ts.snap(value)
        return value

    def minus(self, s, t):
        """ delta_-(s, t), or None outside its domain """
        try:
            return self._snap(self.delta_minus(s, t))
        except (ValueError, ZeroDivisionError, OverflowError):
            return None

    def plus(self, s, t):
        """ delta_+(s, t), or None outside its domain """
        try:
            return self._snap(self.delta_plus(s, t))
        except (ValueError, ZeroDivisionError, OverflowError):
            return None

    def admissible(self, value):
        return value is not None and self.in_t_star(value)


def _translation_minus(s, t):
    return t - s


def _translation_plus(s, t):
    return t + s


def _scaling_minus(s, t):
    return t / s


def _scaling_plus(s, t):
    return t * s


def _sqrt_minus(s, t):
    d = t * t - s * s
    if d < -1e-12 * max(1.0, t * t):
        raise ValueError("negative radicand")
    return math.sqrt(max(d, 0.0))


def _sqrt_plus(s, t):
    return math.sqrt(t * t + s * s)


def _real_scaling_minus(s, t):
    return t / s if t >= 0 else t * s


def _real_scaling_plus(s, t):
    return t * s if t >= 0 else t / s


def _nonzero(t):
    return t != 0


def _positive(t):
    return t > 0


BUILTIN = {
    Family.Translation: (0.0, _translation_minus, _translation_plus),
    Family.Scaling: (1.0, _scaling_minus, _scaling_plus),
    Family.SqrtPythagorean: (0.0, _sqrt_minus, _sqrt_plus),
    Family.RealScaling: (1.0, _real_scaling_minus, _real_scaling_plus),
}


def _compatible(family, ts):
    segs = ts.segments
    if family is Family.Translation:
        return all(isinstance(s, (DenseInterval, ArithmeticGrid)) for s in segs)
    if family is Family.Scaling:
        return all(isinstance(s, GeometricGrid) for s in segs) and len({s.q for s in segs}) == 1
    if family is Family.SqrtPythagorean:
        return all(isinstance(s, SqrtGrid) for s in segs)
    if family is Family.RealScaling:
        return (
            len(segs) == 1
            and isinstance(segs[0], DenseInterval)
            and segs[0].a == -math.inf
            and segs[0].b == math.inf
        )
    return True


def builtin_shift(family, ts, t0=None, params=None):
    """
    Shift system of a named family on ts.  Custom families take
    params["delta_minus"], params["delta_plus"] and optionally params["t_star"].
    """
    params = params or {}
    if family is Family.Custom:
        try:
            minus, plus = params["delta_minus"], params["delta_plus"]
        except KeyError as e:
            raise IncompatibleFamily(f"custom shifts need {e.args[0]}")
        if t0 is None:
            raise IncompatibleFamily("custom shifts need an explicit t0")
        return ShiftSystem(ts, float(t0), minus, plus, family, params.get("t_star"))

    if not _compatible(family, ts):
        raise IncompatibleFamily(f"{family.name} shifts do not fit {ts.label or 'time scale'}")
    default_t0, minus, plus = BUILTIN[family]
    if t0 is not None and not close(t0, default_t0):
        raise IncompatibleFamily(f"{family.name} shifts need t0 = {default_t0}, got {t0}")
    if not ts.contains(default_t0):
        raise IncompatibleFamily(f"t0 = {default_t0} is not a point of {ts.label}")
    t_star = {Family.RealScaling: _nonzero, Family.Scaling: _positive}.get(family)
    return ShiftSystem(ts, default_t0, minus, plus, family, t_star)


def _normalize_delays(shift, delays):
    delays = [float(h) for h in delays]
    if not delays or not close(delays[0], shift.t0):
        delays = [shift.t0] + delays
    return tuple(delays)


@attr.s(auto_attribs=True, frozen=True)
class DelaySpec:
    """ delays h_0 = t0 < h_1 < ... < h_r, each a point of the time scale """

    shift: ShiftSystem
    delays: typing.Tuple[float, ...]

    def __attrs_post_init__(self):
        delays = _normalize_delays(self.shift, self.delays)
        object.__setattr__(self, "delays", delays)
        if len(delays) < 2:
            raise InvalidDelaySpec("at least one positive delay is needed")
        for a, b in zip(delays, delays[1:]):
            if not b > a:
                raise InvalidDelaySpec(f"delays must be strictly increasing ({a} >= {b})")
        for h in delays:
            if not self.shift.ts.contains(h):
                raise InvalidDelaySpec(f"delay {h} is not a point of {self.shift.ts.label}")

    @property
    def ts(self):
        return self.shift.ts

    @property
    def t0(self):
        return self.shift.t0

    @property
    def r(self):
        return len(self.delays) - 1

    @property
    def h_r(self):
        return self.delays[-1]

    @property
    def history_start(self):
        """ delta_-(h_r, t0), or None where the family leaves it undefined """
        return self.shift.minus(self.h_r, self.t0)

    def delayed(self, t):
        """ [delta_-(h_i, t) for i in 0..r] """
        return [t] + [self.shift.minus(h, t) for h in self.delays[1:]]


def delay_apply(spec, i, t):
    """ delta_-(h_i, t) for t >= t0 """
    if not 0 <= i <= spec.r:
        raise OutOfDomain(f"no delay with index {i} (r = {spec.r})")
    if t < spec.t0 - 1e-12 * max(1.0, abs(spec.t0)) or not spec.ts.contains(t):
        raise OutOfDomain(f"{t} is not a point of [t0, inf)")
    if i == 0:
        return spec.ts.snap(t)
    value = spec.shift.minus(spec.delays[i], t)
    if not spec.shift.admissible(value):
        raise OutOfDomain(f"delta_-({spec.delays[i]}, {t}) = {value} is outside T*")
    return value


def default_window(shift, steps=10):
    """ a window around t0 covering several jumps or ten units of dense time """
    ts = shift.ts
    if any(seg.dense for seg in ts.segments):
        return max(shift.t0 - steps, ts.lower), shift.t0 + steps
    lo = hi = shift.t0
    for _ in range(steps):
        hi = sigma(ts, hi)
        try:
            prev = rho(ts, lo)
        except UndefinedJump:
            continue
        if shift.in_t_star(prev):
            lo = prev
    return lo, hi


def _near(a, b):
    return a is not None and b is not None and close(a, b, RTOL)


def _shift_sizes(shift, rng, hi, count):
    return [s for s in sample_points(shift.ts, rng, shift.t0, hi, count) if s >= shift.t0]


def validate_shift_axioms(shift, samples=1000, seed=42, window=None):
    """
    Sample the shift axioms and their consequences; the report names each
    property with the first witness that broke it.
    """
    rng = np.random.default_rng(seed)
    lo, hi = window or default_window(shift)
    pts = [t for t in sample_points(shift.ts, rng, lo, hi, 3 * samples) if shift.in_t_star(t)]
    sizes = _shift_sizes(shift, rng, hi, 2 * samples)
    report = Report(f"shift axioms ({shift.family.name})", seed=seed)
    if not pts or not sizes:
        report.check("samples").record(False, detail="no admissible sample points")
        return report
    m, d = shift.minus, shift.plus
    t0 = shift.t0

    for k in range(samples):
        s, s2 = sizes[k % len(sizes)], sizes[(7 * k + 3) % len(sizes)]
        t, u, v = pts[k % len(pts)], pts[(3 * k + 1) % len(pts)], pts[(5 * k + 2) % len(pts)]
        t, u = min(t, u), max(t, u)

        if t < u and s <= t:
            a, b = m(s, t), m(s, u)
            if a is not None and b is not None:
                report.check("P1 delta_- increasing").record(a < b, witness=(s, t, u))
            a, b = d(s, t), d(s, u)
            if a is not None and b is not None:
                report.check("P1 delta_+ increasing").record(a < b, witness=(s, t, u))

        small, large = min(s, s2), max(s, s2)
        if small < large:
            a, b = m(small, v), m(large, v)
            if a is not None and b is not None:
                report.check("P2 delta_- decreasing in shift size").record(
                    a > b, witness=(small, large, v))
            a, b = d(small, v), d(large, v)
            if a is not None and b is not None:
                report.check("P2 delta_+ increasing in shift size").record(
                    a < b, witness=(small, large, v))

        report.check("P3 delta_+(s, t0) = s").record(_near(d(s, t0), s), witness=s,
                                                      detail=f"delta_+({s}, {t0}) = {d(s, t0)}")
        report.check("P3 delta_+(t0, t) = t").record(_near(d(t0, v), v), witness=v,
                                                      detail=f"delta_+({t0}, {v}) = {d(t0, v)}")

        x = d(s, v)
        if shift.admissible(x):
            report.check("P4 delta_-(s, delta_+(s, t)) = t").record(
                _near(m(s, x), v), witness=(s, v))
        x = m(s, v)
        if shift.admissible(x):
            report.check("P4 delta_+(s, delta_-(s, t)) = t").record(
                _near(d(s, x), v), witness=(s, v))

        x = d(s, v)
        y = m(s2, x) if shift.admissible(x) else None
        if shift.admissible(y):
            w = m(s2, v)
            ok = shift.admissible(w) and _near(d(s, w), y)
            report.check("P5 shifts commute").record(ok, witness=(s, s2, v))
        x = m(s, v)
        y = d(s2, x) if shift.admissible(x) else None
        if shift.admissible(y):
            w = d(s2, v)
            ok = shift.admissible(w) and _near(m(s, w), y)
            report.check("P5 shifts commute").record(ok, witness=(s, s2, v))

        report.check("(i) delta_-(s, s) = t0").record(_near(m(s, s), t0), witness=s)
        report.check("(ii) delta_-(t0, t) = t").record(_near(m(t0, v), v), witness=v)

        x = d(s, v)
        if shift.admissible(x):
            report.check("(iii) delta_+(s, t) = u implies delta_-(s, u) = t").record(
                _near(m(s, x), v), witness=(s, v))

        if v >= t0:
            base = m(s, t0)
            lhs = d(v, base) if shift.admissible(base) else None
            rhs = m(s, v)
            if lhs is not None and rhs is not None:
                report.check("(iv) delta_+(t, delta_-(s, t0)) = delta_-(s, t)").record(
                    _near(lhs, rhs), witness=(s, v))
            if u >= t0:
                report.check("(v) delta_+(u, t) = delta_+(t, u)").record(
                    _near(d(u, v), d(v, u)), witness=(u, v))
            x = d(s, v)
            if x is not None:
                report.check("(vi) delta_+(s, t) >= t0").record(x >= t0 - 1e-12, witness=(s, v))
            try:
                deriv = delta_derivative(shift.ts, lambda z: d(s, z), v, GridPolicy(1e-5))
            except (TypeError, TimeScaleError):
                deriv = None
            if deriv is not None and math.isfinite(deriv):
                report.check("(viii) delta_+(s, .) is strictly increasing").record(
                    deriv > 0, margin=deriv, witness=(s, v))

        if v >= s:
            x = m(s, v)
            if x is not None:
                report.check("(vii) delta_-(s, t) >= t0").record(x >= t0 - 1e-12, witness=(s, v))

        a, b, c = sorted((s, s2, max(v, t0)))
        if a >= t0:
            left, right = m(a, b), m(b, c)
            if left is not None and right is not None and left >= t0 - 1e-12:
                report.check("(ix) delta_+(delta_-(u, s), delta_-(s, v)) = delta_-(u, v)").record(
                    _near(d(left, right), m(a, c)), witness=(a, b, c))

        x = d(s, t0)
        if x is not None and _near(m(s, x), t0):
            report.check("(x) delta_-(s, t) = t0 implies s = t").record(
                _near(s, x), witness=(s, x))

    for c in report.failures():
        logger.info("shift check %r failed at %r %s", c.name, c.witness, c.detail)
    return report


def validate_delay_function(spec, window=None, samples=200, seed=42, policy=None):
    """
    Check that each delta_-(h_i, .) is a delay function on the window:
    below the identity, onto, increasing, preserving right-scatteredness and
    commuting with the forward jump.
    """
    shift, ts = spec.shift, spec.ts
    lo, hi = window or (spec.t0, default_window(shift)[1])
    lo = max(lo, spec.t0)
    rng = np.random.default_rng(seed)
    step = policy.dense_step if policy else max((hi - lo) / 50.0, 1e-3)
    grid = [t for t, _ in iterate_points(ts, lo, hi, GridPolicy(dense_step=step))]
    pts = sorted(set(grid + sample_points(ts, rng, lo, hi, samples)))
    report = Report("delay functions", seed=seed)

    for h in spec.delays[1:]:
        images = []
        for t in pts:
            x = shift.minus(h, t)
            if x is None or not ts.contains(x):
                report.check("onto").record(False, witness=t,
                                            detail=f"delta_-({h}, {t}) = {x} is not in T")
                images.append(None)
                continue
            images.append(x)
            report.check("delta_-(h, t) < t").record(x < t, margin=t - x, witness=t)
            back = shift.plus(h, x)
            report.check("onto").record(_near(back, t), witness=t,
                                        detail=f"delta_+({h}, {x}) = {back}")
            here, there = is_right_scattered(ts, t), is_right_scattered(ts, x)
            kind = "right-scattered" if here else "right-dense"
            report.check("structure preservation").record(
                here == there, witness=t,
                detail=f"{t} is {kind} but delta_-({h}, {t}) = {x} is not",
            )
            if here and there:
                lhs = shift.minus(h, sigma(ts, t))
                rhs = sigma(ts, x)
                report.check("sigma commutation").record(_near(lhs, rhs), witness=t,
                                                         detail=f"{lhs} != {rhs}")
        known = [(t, x) for t, x in zip(pts, images) if x is not None]
        for (t1, x1), (t2, x2) in zip(known, known[1:]):
            report.check("increasing").record(x1 < x2, witness=(t1, t2))

    for c in report.failures():
        logger.info("delay check %r failed at %r: %s", c.name, c.witness, c.detail)
    return report

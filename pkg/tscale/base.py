import attr
import bisect
import enum
import math
import typing
from .exceptions import FieldGap, HistoryGap


def finite_or_none(value):
    """ JSON has no NaN or infinity; those become null """
    if value is None or math.isfinite(value):
        return value
    return None


class PointKind(enum.Enum):
    Scattered = 1
    Dense = 2

    def is_scattered(self):
        return self is PointKind.Scattered

    @property
    def label(self):
        return "scattered" if self.is_scattered() else "dense"


class Family(enum.Enum):
    Translation = 1
    Scaling = 2
    SqrtPythagorean = 3
    RealScaling = 4
    Custom = 5


class Form(enum.Enum):
    SumPower = 1
    SupForm = 2
    ProductForm = 3
    MaxForm = 4

    def uses_sup(self):
        return self in (Form.SupForm, Form.MaxForm)


class RhsForm(enum.Enum):
    SumPowerEq = 1
    SupEq = 2
    MaxEq = 3
    ProductEq = 4
    Custom = 5


class HistoryKind(enum.Enum):
    Constant = 1
    Tabulated = 2
    Callable = 3


class Interp(enum.Enum):
    LinearDense = 1
    StepScattered = 2


class Verdict(enum.Enum):
    Certified = 1
    Violated = 2
    HypothesisFailed = 3

    def is_success(self):
        return self is Verdict.Certified


def close(a, b, rtol=1e-10):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


@attr.s(auto_attribs=True, frozen=True)
class GridPolicy:
    dense_step: float = 1e-3
    membership_rtol: float = 1e-12

    def __attrs_post_init__(self):
        if not self.dense_step > 0:
            raise ValueError(f"dense_step must be positive, got {self.dense_step}")
        if not self.membership_rtol > 0:
            raise ValueError(f"membership_rtol must be positive, got {self.membership_rtol}")


@attr.s(auto_attribs=True)
class Check:
    name: str
    passed: bool = True
    samples: int = 0
    worst_margin: float = math.inf
    witness: typing.Any = None
    detail: str = ""

    def record(self, ok, margin=None, witness=None, detail=""):
        """ count one sample; the first failure is kept as the witness """
        self.samples += 1
        if margin is not None and margin < self.worst_margin:
            self.worst_margin = margin
        if not ok and self.passed:
            self.passed = False
            self.witness = witness
            self.detail = detail


@attr.s(auto_attribs=True)
class Report:
    title: str
    checks: typing.List[Check] = attr.Factory(list)
    seed: typing.Optional[int] = None

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        c = Check(name)
        self.checks.append(c)
        return c

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return attr.asdict(self)


@attr.s(auto_attribs=True)
class RootField:
    grid: typing.List[float] = attr.Factory(list)
    lambdas: typing.List[float] = attr.Factory(list)
    residuals: typing.List[float] = attr.Factory(list)
    s_lower: typing.List[float] = attr.Factory(list)
    tol: float = 1e-10
    jumps: typing.List[float] = attr.Factory(list)
    errors: typing.Dict[float, str] = attr.Factory(dict)

    @classmethod
    def constant(cls, value, t0, tol=1e-10):
        return cls([t0], [value], [0.0], [-math.inf], tol=tol)

    @property
    def partial(self):
        return bool(self.errors)

    def __len__(self):
        return len(self.grid)

    def rate_at(self, t):
        """
        Left-piecewise-constant interpolation: the root computed at grid time g
        holds on [g, next grid time).  Times before the first grid time use the
        first root.
        """
        if not self.grid:
            raise FieldGap("root field is empty")
        idx = bisect.bisect_right(self.grid, t + 1e-12 * max(1.0, abs(t))) - 1
        return self.lambdas[max(idx, 0)]

    def is_constant(self, tol=None):
        tol = self.tol if tol is None else tol
        return not self.lambdas or max(self.lambdas) - min(self.lambdas) <= 10 * tol

    def envelope(self):
        """ the slowest rate in the field, as a constant field """
        if not self.grid:
            raise FieldGap("root field is empty")
        return RootField.constant(max(self.lambdas), self.grid[0], tol=self.tol)

    def rows(self):
        return zip(self.grid, self.lambdas, self.residuals, self.s_lower)


@attr.s(auto_attribs=True)
class Trajectory:
    times: typing.List[float]
    values: typing.List[float]
    mus: typing.List[float]
    kinds: typing.List[PointKind]
    t0: float
    interp: Interp = Interp.LinearDense
    meta: typing.Dict[str, typing.Any] = attr.Factory(dict)

    def __len__(self):
        return len(self.times)

    @property
    def window(self):
        return (self.times[0], self.times[-1])

    def append(self, t, x, mu, kind):
        self.times.append(t)
        self.values.append(x)
        self.mus.append(mu)
        self.kinds.append(kind)

    def value_at(self, t, rtol=1e-12):
        times = self.times
        if not times or t < times[0] - rtol * max(1.0, abs(times[0])):
            raise HistoryGap(f"no trajectory value at {t}")
        idx = bisect.bisect_left(times, t)
        if idx < len(times) and close(times[idx], t, rtol):
            return self.values[idx]
        if idx > 0 and close(times[idx - 1], t, rtol):
            return self.values[idx - 1]
        if idx == len(times):
            raise HistoryGap(f"no trajectory value at {t}")
        # linear between neighbours; scattered points are always stored exactly
        t1, t2 = times[idx - 1], times[idx]
        x1, x2 = self.values[idx - 1], self.values[idx]
        return x1 + (x2 - x1) * (t - t1) / (t2 - t1)

    def slice(self, a, b):
        """ samples with a <= t <= b, as (t, x) pairs """
        lo = bisect.bisect_left(self.times, a - 1e-12 * max(1.0, abs(a)))
        hi = bisect.bisect_right(self.times, b + 1e-12 * max(1.0, abs(b)))
        return list(zip(self.times[lo:hi], self.values[lo:hi]))

    def rows(self):
        for t, x, mu, kind in zip(self.times, self.values, self.mus, self.kinds):
            yield t, x, mu, kind.label


@attr.s(auto_attribs=True)
class Certificate:
    verdict: Verdict
    K0: float
    root_field: RootField
    margin: float
    horizon: typing.Tuple[float, float]
    digest: str = ""
    violated_at: typing.Optional[float] = None
    failed_hypotheses: typing.List[str] = attr.Factory(list)
    decay_estimate: typing.Optional[float] = None
    rate_mode: str = "pointwise"
    tolerated: typing.List[float] = attr.Factory(list)

    def to_dict(self):
        return {
            "verdict": self.verdict.name,
            "K0": finite_or_none(self.K0),
            "margin": finite_or_none(self.margin),
            "horizon": list(self.horizon),
            "digest": self.digest,
            "violated_at": self.violated_at,
            "failed_hypotheses": self.failed_hypotheses,
            "decay_estimate": finite_or_none(self.decay_estimate),
            "rate_mode": self.rate_mode,
            "rate": finite_or_none(max(self.root_field.lambdas, default=None)),
            "tolerated": self.tolerated,
        }

"""
Forward simulation of delay dynamic equations

    x^delta(t) = -p(t) x(t) + F(t, x(t), x(delta_-(h_1, t)), ..., x(delta_-(h_r, t)))

Right-scattered steps are exact (x(sigma t) = x(t) + mu(t) x^delta(t)); dense
segments are integrated with RK4 at the grid policy's step, delayed values
are read back from the stored trajectory.
"""
import attr
import collections
import logging
import math
import typing
import numpy as np
from .base import (
    Form,
    GridPolicy,
    HistoryKind,
    Interp,
    PointKind,
    Report,
    RhsForm,
    Trajectory,
)
from .coefficients import Coefficient, coefficient_list
from .exceptions import (
    FieldGap,
    HistoryGap,
    NegativeBaseFractionalPower,
    NotRegressive,
    SimulationError,
)
from .timescale import iterate_points, mu

logger = logging.getLogger(__name__)


@attr.s(auto_attribs=True, frozen=True)
class HistoryFunction:
    kind: HistoryKind
    value: float = 0.0
    times: typing.Tuple[float, ...] = attr.ib(default=(), converter=tuple)
    values: typing.Tuple[float, ...] = attr.ib(default=(), converter=tuple)
    func: typing.Optional[typing.Callable[[float], float]] = None
    label: str = ""

    @classmethod
    def constant(cls, value):
        return cls(HistoryKind.Constant, value=float(value), label=f"const:{value}")

    @classmethod
    def tabulated(cls, times, values, label="table"):
        if len(times) != len(values) or not times:
            raise ValueError("history table needs matching, non-empty times and values")
        return cls(HistoryKind.Tabulated, times=times, values=values, label=label)

    @classmethod
    def from_callable(cls, func):
        return cls(HistoryKind.Callable, func=func, label=getattr(func, "__name__", "callable"))

    def __call__(self, t):
        if self.kind is HistoryKind.Constant:
            return self.value
        if self.kind is HistoryKind.Callable:
            return float(self.func(t))
        tol = 1e-12 * max(1.0, abs(t))
        if t < self.times[0] - tol or t > self.times[-1] + tol:
            raise HistoryGap(f"history table does not cover {t}")
        return float(np.interp(t, self.times, self.values))

    def sup(self, ts, start, end, policy=None):
        """ sup of |phi| over the points of [start, end] """
        return max(abs(self(t)) for t, _ in iterate_points(ts, start, end, policy))


RHS_FOR_FORM = {
    Form.SumPower: RhsForm.SumPowerEq,
    Form.SupForm: RhsForm.SupEq,
    Form.MaxForm: RhsForm.MaxEq,
    Form.ProductForm: RhsForm.ProductEq,
}


@attr.s(auto_attribs=True, frozen=True)
class RhsSpec:
    """
    Right-hand side -p x + F.  Custom forms supply forcing(t, x, delayed) and
    name the Halanay form (with this spec's q, alpha and ell) that bounds |F|.
    """

    form: RhsForm
    p: Coefficient = attr.ib(converter=Coefficient.of)
    q: typing.List[Coefficient] = attr.ib(converter=coefficient_list)
    ell: float = 1.0
    alpha: typing.List[float] = attr.Factory(list)
    tau: typing.Optional[float] = None
    forcing: typing.Optional[typing.Callable] = None
    dominated_by: typing.Optional[Form] = None
    state_range: typing.Tuple[float, float] = (-2.0, 2.0)
    offset: float = 0.0
    monotone: bool = True

    def __attrs_post_init__(self):
        if self.form is RhsForm.Custom:
            if self.forcing is None or self.dominated_by is None:
                raise ValueError("custom right-hand sides need forcing and dominated_by")
        elif self.form is RhsForm.ProductEq and len(self.alpha) != len(self.q):
            raise ValueError("product right-hand side needs one exponent per coefficient")

    @classmethod
    def for_problem(cls, problem, **kwargs):
        """ the equation that attains the bound of a Halanay problem """
        return cls(
            RHS_FOR_FORM[problem.form],
            problem.p,
            problem.q,
            ell=problem.ell,
            alpha=list(problem.alpha),
            tau=problem.tau,
            **kwargs,
        )


def _power(x, e):
    if e == 1:
        return x
    if x < 0:
        raise NegativeBaseFractionalPower(f"{x} ** {e} with a fractional exponent")
    return x ** e


def forcing(rhs, spec, t, x, value_at, sup_over=None):
    """
    F(t, x, delayed values) for rhs, reading delayed states through value_at.
    sup_over(a, b) returns the sup of the stored state on [a, b].
    """
    form = rhs.form
    minus = spec.shift.delta_minus
    if form is RhsForm.SupEq:
        start = minus(rhs.tau or spec.h_r, t)
        top = max(sup_over(start, t), x)
        return rhs.q[0](t) * _power(top, rhs.ell) - rhs.offset
    states = [x] + [value_at(minus(h, t)) for h in spec.delays[1:]]
    if form is RhsForm.SumPowerEq:
        value = sum(q(t) * _power(z, rhs.ell) for q, z in zip(rhs.q, states))
    elif form is RhsForm.MaxEq:
        value = rhs.q[0](t) * max(_power(z, rhs.ell) for z in states)
    elif form is RhsForm.ProductEq:
        value = math.prod(q(t) * _power(z, a) for q, z, a in zip(rhs.q, states, rhs.alpha))
    else:
        value = rhs.forcing(t, x, states[1:])
    return value - rhs.offset


class WindowMax:
    """ sliding sup over stored samples for windows whose start never decreases """

    def __init__(self, traj):
        self.traj = traj
        self.queue = collections.deque()

    def push(self, t, x):
        while self.queue and self.queue[-1][1] <= x:
            self.queue.pop()
        self.queue.append((t, x))

    def __call__(self, a, b):
        while self.queue and self.queue[0][0] < a - 1e-12 * max(1.0, abs(a)):
            self.queue.popleft()
        edge = self.traj.value_at(a)
        return max(edge, self.queue[0][1]) if self.queue else edge


def simulate(ts, spec, rhs, history, T_end, policy=None):
    """ trajectory on [delta_-(h_r, t0), T_end] with the history on the initial window """
    policy = policy or GridPolicy()
    t0 = spec.t0
    delay = max(spec.h_r, rhs.tau or spec.h_r)
    start = spec.shift.minus(delay, t0)
    if start is None:
        raise HistoryGap(f"delta_-({delay}, {t0}) is undefined, no history window")
    traj = Trajectory([], [], [], [], t0, meta={"dense_step": policy.dense_step, "T_end": T_end,
                                                 "rhs": getattr(rhs.form, "name", str(rhs.form))})
    window = WindowMax(traj)
    for t, kind in iterate_points(ts, start, t0, policy):
        x = history(t)
        if not math.isfinite(x):
            raise HistoryGap(f"history is not finite at {t}")
        traj.append(t, x, mu(ts, t) if kind.is_scattered() else 0.0, kind)
        window.push(t, x)

    def f(t, x):
        return -rhs.p(t) * x + forcing(rhs, spec, t, x, traj.value_at, window)

    points = iterate_points(ts, t0, T_end, policy)
    x = traj.values[-1]
    for (a, kind), (b, next_kind) in zip(points, points[1:]):
        h = b - a
        if kind.is_scattered():
            x = x + h * f(a, x)
        else:
            k1 = f(a, x)
            k2 = f(a + h / 2, x + h / 2 * k1)
            k3 = f(a + h / 2, x + h / 2 * k2)
            k4 = f(b, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not math.isfinite(x):
            raise SimulationError(f"state is not finite at {b}")
        traj.append(b, x, mu(ts, b) if next_kind.is_scattered() else 0.0, next_kind)
        window.push(b, x)
    if all(k is PointKind.Scattered for k in traj.kinds):
        traj.interp = Interp.StepScattered
    logger.debug("simulated %d samples on [%g, %g]", len(traj), start, T_end)
    return traj


def field_log_increment(field, a, b, step_mu=0.0):
    """
    log of e_lambda(b, a) for a left-piecewise-constant rate field: one factor
    1 + mu*lambda(a) for a right-scattered step, otherwise the exact integral
    of the step function over [a, b].
    """
    if step_mu > 0:
        z = 1.0 + step_mu * field.rate_at(a)
        if z <= 0:
            raise NotRegressive(f"1 + mu*lambda = {z} at {a}")
        return math.log(z)
    cuts = [g for g in field.grid if a < g < b]
    edges = [a] + cuts + [b]
    return sum(field.rate_at(lo) * (hi - lo) for lo, hi in zip(edges, edges[1:]))


def simulate_exponential_candidate(ts, field, K, T_end=None, policy=None):
    """ y(t) = K e_lambda(t, t0) along the points of [t0, T_end] """
    if not field.grid:
        raise FieldGap("root field is empty")
    t0 = field.grid[0]
    T_end = field.grid[-1] if T_end is None else T_end
    points = iterate_points(ts, t0, T_end, policy)
    traj = Trajectory([], [], [], [], t0, meta={"K": K})
    log_y = math.log(K)
    for i, (t, kind) in enumerate(points):
        step = mu(ts, t) if kind.is_scattered() else 0.0
        traj.append(t, math.exp(log_y), step, kind)
        if i + 1 < len(points):
            log_y += field_log_increment(field, t, points[i + 1][0], step)
    return traj


def comparison_run(ts, spec, rhs, phi, psi, T_end, margin=1e-3, policy=None):
    """
    Simulate a strict subsolution (rhs shifted down by margin, history phi) and
    a solution (history psi > phi) and report whether the order is kept.
    """
    report = Report("comparison")
    start = spec.shift.minus(max(spec.h_r, rhs.tau or spec.h_r), spec.t0)
    ordered = report.check("histories strictly ordered")
    for t, _ in iterate_points(ts, start, spec.t0, policy):
        ordered.record(phi(t) < psi(t), margin=psi(t) - phi(t), witness=t)
    report.check("forcing monotone in delayed states").record(rhs.monotone)
    if not report.passed:
        return report
    lower = simulate(ts, spec, attr.evolve(rhs, offset=rhs.offset + margin), phi, T_end, policy)
    upper = simulate(ts, spec, rhs, psi, T_end, policy)
    check = report.check("subsolution stays below")
    for t, lo, up in zip(lower.times, lower.values, upper.values):
        if t >= spec.t0:
            check.record(lo < up, margin=up - lo, witness=t, detail=f"{lo} >= {up}")
    return report

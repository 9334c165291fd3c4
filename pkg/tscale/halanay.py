"""
Characteristic functions of Halanay-type inequalities and their largest
negative roots.

For each form the characteristic function P(t, k) is evaluated in a normalized
shape N(t, k) = P(t, k) * exp(-scale(t, k)) with the same sign.  N only depends
on the delay window around t when ell == 1 (or for the product form), which
lets the root field reuse roots between times with identical local structure.
"""
import asyncio
import attr
import logging
import math
import typing
from concurrent.futures import ThreadPoolExecutor
import numpy as np
from scipy.optimize import brentq
from .base import Form, GridPolicy, RootField
from .coefficients import Coefficient, coefficient_list
from .exceptions import NoSignChange, NotBracketed, OutsideS
from .shifts import DelaySpec
from .timescale import DenseRun, iterate_points, mu_tilde, pieces
from .tsexp import log_exp

logger = logging.getLogger(__name__)

SCAN_POINTS = 64
S_FLOOR = -1e3
FLOOR_DEEPEN = 1e3
JUMP_THRESHOLD = 0.1


@attr.s(auto_attribs=True)
class HalanayProblem:
    spec: DelaySpec
    form: Form
    p: Coefficient = attr.ib(converter=Coefficient.of)
    q: typing.List[Coefficient] = attr.ib(converter=coefficient_list)
    ell: float = 1.0
    alpha: typing.List[float] = attr.Factory(list)
    Kconst: float = 1.0
    tau: typing.Optional[float] = None

    def __attrs_post_init__(self):
        r = self.spec.r
        if self.form in (Form.SumPower, Form.ProductForm) and len(self.q) != r + 1:
            raise ValueError(f"{self.form.name} needs {r + 1} q coefficients, got {len(self.q)}")
        if self.form.uses_sup() and len(self.q) != 1:
            raise ValueError(f"{self.form.name} takes a single q coefficient")
        if self.form is Form.ProductForm:
            if len(self.alpha) != r + 1:
                raise ValueError(f"product form needs {r + 1} exponents, got {len(self.alpha)}")
            if any(a <= 0 for a in self.alpha):
                raise ValueError("product exponents must be positive")
            if abs(sum(self.alpha) - 1.0) > 1e-12:
                raise ValueError(f"product exponents must sum to 1, got {sum(self.alpha)}")
        elif not 0 < self.ell <= 1:
            raise ValueError(f"ell must lie in (0, 1], got {self.ell}")
        if self.Kconst < 1:
            raise ValueError(f"K must be at least 1, got {self.Kconst}")
        if self.form is Form.SupForm:
            if self.tau is None:
                self.tau = self.spec.h_r
            if not self.ts.contains(self.tau) or self.tau <= self.t0:
                raise ValueError(f"tau = {self.tau} must be a point of the time scale above t0")
        if self.window_start is None:
            raise ValueError(f"delta_-({self.delay}, {self.t0}) is undefined, no history window")

    @property
    def ts(self):
        return self.spec.ts

    @property
    def t0(self):
        return self.spec.t0

    @property
    def delay(self):
        """ the delay that bounds the window: tau for the sup form, h_r otherwise """
        return self.tau if self.form is Form.SupForm else self.spec.h_r

    @property
    def window_start(self):
        return self.spec.shift.minus(self.delay, self.t0)

    @property
    def is_local(self):
        return self.form is Form.ProductForm or self.ell == 1

    def anchor(self, t):
        return self.spec.shift.minus(self.delay, t)


@attr.s(auto_attribs=True)
class RootResult:
    t: float
    value: float
    residual: float
    s_lower: float


def s_window(problem, t, floor=S_FLOOR):
    """ the admissible interval S(t) = (-1/mu~(t), 0) as (lower, upper) """
    m = mu_tilde(problem.ts, t, problem.window_start)
    return (-1.0 / m if m > 0 else floor), 0.0


def _check_inside(problem, t, k):
    lower, _ = s_window(problem, t, -math.inf)
    if np.any(np.asarray(k) <= lower):
        raise OutsideS(f"k = {k} is not above {lower} at t = {t}")


def _log_e(problem, k, a, b):
    return log_exp(problem.ts, k, a, b)


def _normalized(problem, t, k):
    ts_min = problem.spec.shift.minus
    p = problem.p(t)
    form, ell = problem.form, problem.ell
    with np.errstate(over="ignore", invalid="ignore"):
        if form is Form.SumPower:
            dr = problem.anchor(t)
            scale = (1 - ell) * _log_e(problem, k, dr, problem.t0) if ell != 1 else 0.0
            total = (k + p) * np.exp(_log_e(problem, k, t, dr))
            weight = problem.Kconst ** (ell - 1)
            for h, q in zip(problem.spec.delays, problem.q):
                d = ts_min(h, t)
                total = total - weight * q(t) * np.exp(ell * _log_e(problem, k, d, dr) - scale)
            return total
        if form.uses_sup():
            d = problem.anchor(t)
            first = (k + p) * np.exp(_log_e(problem, k, t, d))
            second = problem.Kconst ** ell * problem.q[0](t)
            if ell != 1:
                second = second * np.exp((ell - 1) * _log_e(problem, k, d, problem.t0))
            return first - second
        dr = problem.anchor(t)
        logs = sum(a * _log_e(problem, k, ts_min(h, t), dr)
                   for a, h in zip(problem.alpha, problem.spec.delays))
        beta = math.prod(q(t) for q in problem.q)
        return (k + p) * np.exp(_log_e(problem, k, t, dr)) - beta * np.exp(logs)


def _log_scale(problem, t, k):
    """ log of the positive factor between the normalized and literal forms """
    if problem.form is Form.SumPower:
        if problem.ell == 1:
            return 0.0
        return (1 - problem.ell) * _log_e(problem, k, problem.anchor(t), problem.t0)
    return _log_e(problem, k, problem.anchor(t), problem.t0)


def char_poly(problem, t, k):
    """ the characteristic function P(t, k) for k in S(t) or k = 0 """
    if k != 0:
        _check_inside(problem, t, k)
    with np.errstate(over="ignore", invalid="ignore"):
        return float(_normalized(problem, t, k) * np.exp(_log_scale(problem, t, k)))


def char_at_zero(problem, t):
    """ P(t, 0), positive whenever the hypotheses hold """
    return char_poly(problem, t, 0.0)


def _scan(problem, t, lower, tol):
    ks = np.concatenate([[0.0], lower * np.geomspace(tol, 1 - tol, SCAN_POINTS)])
    vals = np.asarray(_normalized(problem, t, ks), dtype=float)
    if not vals[0] > 0:
        raise NoSignChange(f"P({t}, 0) = {vals[0]:g} is not positive")
    for j in range(1, ks.size):
        if vals[j] == 0:
            return ks[j], ks[j]
        if vals[j] < 0:
            return ks[j], ks[j - 1]
    if np.nanmin(np.abs(vals[1:])) <= tol:
        raise NotBracketed(f"P({t}, .) touches zero without changing sign")
    return None


def largest_root(problem, t, tol=1e-10, floor=S_FLOOR):
    """
    The largest root of P(t, .) in S(t): a sign scan downward from 0 on a grid
    refined near 0, then Brent's method on the first bracket.
    """
    lower, _ = s_window(problem, t, floor)
    bracket = _scan(problem, t, lower, tol)
    if bracket is None and lower == floor:
        lower = floor * FLOOR_DEEPEN
        logger.debug("no root above %g at t=%g, deepening to %g", floor, t, lower)
        bracket = _scan(problem, t, lower, tol)
    if bracket is None:
        raise NoSignChange(f"P({t}, .) has no sign change on ({lower:g}, 0)")
    a, b = bracket
    if a == b:
        root = float(a)
    else:
        try:
            root = brentq(lambda k: float(_normalized(problem, t, k)), a, b,
                          xtol=max(tol * 1e-3, 1e-15))
        except ValueError as e:
            raise NotBracketed(str(e))
    return RootResult(t, root, abs(char_poly(problem, t, root)), lower)


def _signature(problem, t):
    """ local structure that determines N(t, .), or None when N is not local """
    if not problem.is_local:
        return None
    anchor = problem.anchor(t)
    shape = []
    for piece in pieces(problem.ts, anchor, t, closed=True):
        if isinstance(piece, DenseRun):
            shape.append(("d", round(piece.lo - anchor, 12), round(piece.hi - anchor, 12)))
        else:
            offsets = tuple(np.round(piece.points - anchor, 12))
            shape.append(("p", offsets, tuple(np.round(piece.mus, 12))))
    delayed = tuple(round(problem.spec.shift.minus(h, t) - anchor, 12)
                    for h in problem.spec.delays)
    coeffs = (problem.p(t),) + tuple(q(t) for q in problem.q)
    m = round(mu_tilde(problem.ts, t, problem.window_start), 12)
    return (round(t - anchor, 12), delayed, coeffs, m, tuple(shape))


def root_grid(problem, T_end, step):
    """ every right-scattered point of [t0, T_end] plus dense parts sampled at step """
    policy = GridPolicy(dense_step=step)
    return [t for t, _ in iterate_points(problem.ts, problem.t0, T_end, policy)]


def root_field(problem, grid, tol=1e-10, floor=S_FLOOR, jump_threshold=JUMP_THRESHOLD):
    """
    Largest roots over an increasing grid.  Times where no root is found are
    recorded in RootField.errors and the field is marked partial.
    """
    field = RootField(tol=tol)
    cache = {}
    for t in grid:
        key = _signature(problem, t)
        try:
            if key is not None and key in cache:
                value, lower = cache[key]
                result = RootResult(t, value, abs(char_poly(problem, t, value)), lower)
            else:
                result = largest_root(problem, t, tol, floor)
                if key is not None:
                    cache[key] = (result.value, result.s_lower)
        except (NoSignChange, NotBracketed, OutsideS) as e:
            logger.warning("no root at t=%g: %s", t, e)
            field.errors[t] = str(e)
            continue
        if field.lambdas and abs(result.value - field.lambdas[-1]) > jump_threshold:
            logger.info("root jumps from %g to %g at t=%g", field.lambdas[-1], result.value, t)
            field.jumps.append(t)
        field.grid.append(t)
        field.lambdas.append(result.value)
        field.residuals.append(result.residual)
        field.s_lower.append(result.s_lower)
    logger.debug("root field: %d points, %d distinct solves", len(field), len(cache))
    return field


def _merge(parts, tol):
    field = RootField(tol=tol)
    for part in parts:
        if field.lambdas and part.lambdas:
            if abs(part.lambdas[0] - field.lambdas[-1]) > JUMP_THRESHOLD:
                field.jumps.append(part.grid[0])
        field.grid += part.grid
        field.lambdas += part.lambdas
        field.residuals += part.residuals
        field.s_lower += part.s_lower
        field.jumps += part.jumps
        field.errors.update(part.errors)
    return field


async def root_field_async(problem, grid, tol=1e-10, floor=S_FLOOR, workers=4):
    """ root_field over chunks of the grid in a thread pool, merged in grid order """
    loop = asyncio.get_event_loop()
    size = max(1, math.ceil(len(grid) / workers))
    chunks = [grid[i:i + size] for i in range(0, len(grid), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = await asyncio.gather(
            *[loop.run_in_executor(pool, root_field, problem, chunk, tol, floor)
              for chunk in chunks]
        )
    return _merge(parts, tol)


def classical_char(p, qs, delays, k):
    """ k + p - sum q_i exp(-k h_i), the characteristic function on the reals """
    return k + p - sum(q * math.exp(-k * h) for q, h in zip(qs, delays))


def qn_char_poly(base, p, q0, q1, t, k, m=1, ell=1.0, K=1.0):
    """
    Closed form of the sum-power characteristic function on base^N with
    t0 = 1 and a single delay h = base**m, written with explicit products.
    """
    def factor(s):
        return 1 + (base - 1) * s * k

    dr = t / base ** m
    inner = math.prod(factor(dr * base ** j) for j in range(m))
    if dr >= 1:
        n = round(math.log(dr, base))
        outer = math.prod(factor(base ** j) for j in range(n))
    else:
        n = round(-math.log(dr, base))
        outer = 1 / math.prod(factor(dr * base ** j) for j in range(n))
    return (k + p) * inner * outer ** (1 - ell) - K ** (ell - 1) * (q0 * inner ** ell + q1)

"""
Time scales as finite, ordered compositions of segments.

A segment is one of:

    DenseInterval(a, b)              [a, b], b may be +inf
    ArithmeticGrid(start, step, n)   start + k*step for k in [0, n), n may be None (unbounded)
    GeometricGrid(q, nmin, nmax)     q**k for k in [nmin, nmax]; nmin=None adds the cluster point 0
    SqrtGrid(nmin, nmax)             sqrt(k) for k in [nmin, nmax]
    ExplicitPoints(values)           a finite increasing list

Every operation here is pure; a TimeScale never changes after construction.
"""
import attr
import bisect
import logging
import math
import typing
import numpy as np
from scipy.integrate import simpson
from .base import GridPolicy, PointKind
from .exceptions import (
    EmptyWindow,
    InvalidTimeScale,
    NotDifferentiablePoint,
    NotInTimeScale,
    QuadratureFailure,
    UndefinedJump,
)

logger = logging.getLogger(__name__)

INF = math.inf
CLUSTER = "cluster"
QUAD_RTOL = 1e-10
QUAD_MAX_REFINE = 4
EDGE_RTOL = 1e-9


def _tol(t, rtol):
    return rtol * max(1.0, abs(t))


@attr.s(auto_attribs=True, frozen=True)
class DenseInterval:
    a: float
    b: float = INF
    dense = True

    def __attrs_post_init__(self):
        if not self.a < self.b:
            raise InvalidTimeScale(f"dense interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def lower(self):
        return self.a

    @property
    def upper(self):
        return self.b


class _Grid:
    """ shared index arithmetic for the scattered segment kinds """

    dense = False

    @property
    def lower(self):
        return self.point(self.first)

    @property
    def upper(self):
        return INF if self.last is None else self.point(self.last)

    def _clip(self, lo, hi):
        if self.first is not None:
            lo = max(lo, self.first)
        if self.last is not None:
            hi = min(hi, self.last)
        return lo, hi

    def points(self, lo, hi):
        return np.array([self.point(n) for n in range(lo, hi + 1)], dtype=float)


@attr.s(auto_attribs=True, frozen=True)
class ArithmeticGrid(_Grid):
    start: float
    step: float
    count: typing.Optional[int] = None

    def __attrs_post_init__(self):
        if not self.step > 0:
            raise InvalidTimeScale(f"grid step must be positive, got {self.step}")
        if self.count is not None and self.count < 1:
            raise InvalidTimeScale("grid count must be at least 1")

    first = 0

    @property
    def last(self):
        return None if self.count is None else self.count - 1

    def point(self, n):
        return self.start + n * self.step

    def index_of(self, t, rtol):
        n = int(round((t - self.start) / self.step))
        lo, hi = self._clip(n, n)
        if lo == n == hi and abs(self.point(n) - t) <= _tol(t, rtol):
            return n
        return None

    def index_range(self, a, b):
        lo = 0 if a == -INF else math.ceil((a - self.start) / self.step - 1e-9)
        if b == INF:
            hi = self.last if self.last is not None else None
            if hi is None:
                raise EmptyWindow("unbounded window over an unbounded grid")
        else:
            hi = math.floor((b - self.start) / self.step + 1e-9)
        return self._clip(lo, hi)

    def points(self, lo, hi):
        return self.start + np.arange(lo, hi + 1, dtype=float) * self.step


@attr.s(auto_attribs=True, frozen=True)
class GeometricGrid(_Grid):
    q: float
    nmin: typing.Optional[int] = None
    nmax: typing.Optional[int] = None

    def __attrs_post_init__(self):
        if not self.q > 1:
            raise InvalidTimeScale(f"geometric grid needs q > 1, got {self.q}")

    @property
    def first(self):
        return self.nmin

    @property
    def last(self):
        return self.nmax

    @property
    def has_cluster(self):
        return self.nmin is None

    @property
    def lower(self):
        return 0.0 if self.nmin is None else self.point(self.nmin)

    def point(self, n):
        return float(self.q ** n)

    def index_of(self, t, rtol):
        if t <= 0:
            return None
        n = int(round(math.log(t) / math.log(self.q)))
        if self.nmin is not None and n < self.nmin:
            return None
        if self.nmax is not None and n > self.nmax:
            return None
        if abs(self.point(n) - t) <= _tol(t, rtol):
            return n
        return None

    def index_range(self, a, b):
        if a <= 0:
            if self.nmin is None:
                raise EmptyWindow("window reaches the cluster point 0")
            lo = self.nmin
        else:
            lo = math.ceil(math.log(a) / math.log(self.q) - 1e-9)
        if b == INF:
            if self.nmax is None:
                raise EmptyWindow("unbounded window over an unbounded grid")
            hi = self.nmax
        elif b <= 0:
            return (0, -1)
        else:
            hi = math.floor(math.log(b) / math.log(self.q) + 1e-9)
        if self.nmin is not None:
            lo = max(lo, self.nmin)
        if self.nmax is not None:
            hi = min(hi, self.nmax)
        return lo, hi


@attr.s(auto_attribs=True, frozen=True)
class SqrtGrid(_Grid):
    nmin: int = 0
    nmax: typing.Optional[int] = None

    def __attrs_post_init__(self):
        if self.nmin < 0:
            raise InvalidTimeScale("sqrt grid indices start at 0")

    @property
    def first(self):
        return self.nmin

    @property
    def last(self):
        return self.nmax

    def point(self, n):
        return math.sqrt(n)

    def index_of(self, t, rtol):
        if t < 0:
            return None
        n = int(round(t * t))
        lo, hi = self._clip(n, n)
        if lo == n == hi and abs(self.point(n) - t) <= _tol(t, rtol):
            return n
        return None

    def index_range(self, a, b):
        lo = self.nmin if a <= 0 else math.ceil(a * a - 1e-9)
        if b == INF:
            if self.nmax is None:
                raise EmptyWindow("unbounded window over an unbounded grid")
            hi = self.nmax
        elif b < 0:
            return (0, -1)
        else:
            hi = math.floor(b * b + 1e-9)
        return self._clip(lo, hi)


@attr.s(auto_attribs=True, frozen=True)
class ExplicitPoints(_Grid):
    values: typing.Tuple[float, ...] = attr.ib(converter=tuple)

    def __attrs_post_init__(self):
        if not self.values:
            raise InvalidTimeScale("explicit point list is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidTimeScale("explicit points must be strictly increasing")

    first = 0

    @property
    def last(self):
        return len(self.values) - 1

    def point(self, n):
        return float(self.values[n])

    def index_of(self, t, rtol):
        n = bisect.bisect_left(self.values, t)
        for k in (n - 1, n):
            if 0 <= k < len(self.values) and abs(self.values[k] - t) <= _tol(t, rtol):
                return k
        return None

    def index_range(self, a, b):
        tol_a = _tol(a, 1e-12) if a != -INF else 0
        tol_b = _tol(b, 1e-12) if b != INF else 0
        lo = bisect.bisect_left(self.values, a - tol_a)
        hi = bisect.bisect_right(self.values, b + tol_b) - 1
        return lo, hi


@attr.s(auto_attribs=True, frozen=True)
class TimeScale:
    segments: typing.Tuple[typing.Any, ...] = attr.ib(converter=tuple)
    label: str = ""
    t_star_lower: float = -INF
    rtol: float = 1e-12

    def __attrs_post_init__(self):
        if not self.segments:
            raise InvalidTimeScale("a time scale needs at least one segment")
        for i, (left, right) in enumerate(zip(self.segments, self.segments[1:])):
            if not left.upper < right.lower:
                raise InvalidTimeScale(
                    f"segments {i} and {i + 1} overlap or are out of order "
                    f"({left.upper} >= {right.lower})"
                )
        for seg in self.segments[1:]:
            if getattr(seg, "has_cluster", False):
                raise InvalidTimeScale("a cluster point is only allowed in the first segment")
        if self.segments[-1].upper != INF:
            raise InvalidTimeScale("time scale must be unbounded above")

    def locate(self, t):
        """ return (segment index, grid index or None for dense, snapped t) """
        tol = _tol(t, self.rtol)
        for i, seg in enumerate(self.segments):
            if seg.lower - tol > t:
                break
            if seg.dense:
                if seg.a - tol <= t <= seg.b + tol:
                    return i, None, min(max(t, seg.a), seg.b)
                continue
            if getattr(seg, "has_cluster", False) and abs(t) <= self.rtol:
                return i, CLUSTER, 0.0
            n = seg.index_of(t, self.rtol)
            if n is not None:
                return i, n, seg.point(n)
        raise NotInTimeScale(f"{t} is not a point of {self.label or 'the time scale'}")

    def contains(self, t):
        try:
            self.locate(t)
        except NotInTimeScale:
            return False
        return True

    def snap(self, t):
        return self.locate(t)[2]

    @property
    def lower(self):
        return self.segments[0].lower

    def _next_lower(self, i, t):
        if i + 1 < len(self.segments):
            return self.segments[i + 1].lower
        return t

    def _prev_upper(self, i, t):
        if i > 0:
            return self.segments[i - 1].upper
        return t


def sigma(ts, t):
    i, n, t = ts.locate(t)
    seg = ts.segments[i]
    if n is CLUSTER:
        raise UndefinedJump("forward jump is undefined at the cluster point 0")
    if seg.dense:
        return t if t < seg.b else ts._next_lower(i, t)
    if seg.last is None or n < seg.last:
        return seg.point(n + 1)
    return ts._next_lower(i, t)


def rho(ts, t):
    i, n, t = ts.locate(t)
    seg = ts.segments[i]
    if n is CLUSTER:
        raise UndefinedJump("backward jump is undefined at the cluster point 0")
    if seg.dense:
        return t if t > seg.a else ts._prev_upper(i, t)
    if seg.first is None or n > seg.first:
        return seg.point(n - 1)
    return ts._prev_upper(i, t)


def mu(ts, t):
    return sigma(ts, t) - ts.snap(t)


def is_right_scattered(ts, t):
    return mu(ts, t) > 0


@attr.s(auto_attribs=True, frozen=True)
class PointRun:
    points: np.ndarray
    mus: np.ndarray


@attr.s(auto_attribs=True, frozen=True)
class DenseRun:
    lo: float
    hi: float


def pieces(ts, s, t, closed):
    """
    Decompose [s, t] (or [s, t) for right-scattered points when closed is False)
    into dense pieces and arrays of right-scattered points with their graininess.
    """
    for i, seg in enumerate(ts.segments):
        if seg.upper < s or seg.lower > t:
            continue
        if seg.dense:
            lo, hi = max(seg.a, s), min(seg.b, t)
            if hi > lo:
                yield DenseRun(lo, hi)
            # a finite right end of a dense segment is right-scattered
            b = seg.b
            if b != INF and s <= b and (b <= t if closed else b < t):
                if i + 1 < len(ts.segments):
                    gap = ts.segments[i + 1].lower - b
                    yield PointRun(np.array([b]), np.array([gap]))
            continue
        lo, hi = seg.index_range(s, t)
        if hi < lo:
            continue
        pts = seg.points(lo, hi)
        if seg.last is not None and hi == seg.last:
            after = ts._next_lower(i, pts[-1])
            nxt = np.append(pts[1:], after)
        else:
            nxt = np.append(pts[1:], seg.point(hi + 1))
        mus = nxt - pts
        if not closed and pts.size and abs(pts[-1] - t) <= _tol(t, ts.rtol):
            pts, mus = pts[:-1], mus[:-1]
        if pts.size:
            yield PointRun(pts, mus)


def mu_tilde(ts, t, window_start):
    """ supremum of the graininess over the closed window [window_start, t] """
    if window_start > t + _tol(t, ts.rtol):
        raise EmptyWindow(f"window start {window_start} is after {t}")
    ts.locate(t)
    ts.locate(window_start)
    best = 0.0
    for piece in pieces(ts, window_start, t, closed=True):
        if isinstance(piece, PointRun) and piece.mus.size:
            best = max(best, float(np.max(piece.mus)))
    return best


def _breakpoints(f, lo, hi):
    cuts = [b for b in getattr(f, "breakpoints", ()) if lo < b < hi]
    return [lo] + sorted(cuts) + [hi]


def _simpson(f, lo, hi, n):
    x = np.linspace(lo, hi, n + 1)
    # integrals run over [lo, hi): the right end is read just below hi
    edge = max(hi - EDGE_RTOL * max(1.0, abs(hi)), (x[-2] + hi) / 2)
    y = np.array([f(v) for v in x[:-1]] + [f(edge)], dtype=float)
    return float(simpson(y, x=x))


def quad(f, lo, hi, policy):
    total = 0.0
    pts = _breakpoints(f, lo, hi)
    for a, b in zip(pts, pts[1:]):
        n = max(2, math.ceil((b - a) / policy.dense_step))
        n += n % 2
        coarse = _simpson(f, a, b, n)
        prev_diff = INF
        for level in range(QUAD_MAX_REFINE):
            n *= 2
            fine = _simpson(f, a, b, n)
            diff = abs(fine - coarse)
            estimate = fine + (fine - coarse) / 15.0
            if diff <= QUAD_RTOL * max(1.0, abs(fine)):
                break
            if diff >= prev_diff:
                raise QuadratureFailure(
                    f"Simpson refinement stalled on [{a}, {b}] (difference {diff:g})"
                )
            logger.debug("refining quadrature on [%g, %g], level %d", a, b, level + 1)
            prev_diff = diff
            coarse = fine
        else:
            raise QuadratureFailure(f"no convergence on [{a}, {b}] after {QUAD_MAX_REFINE} levels")
        total += estimate
    return total


def delta_integral(ts, f, s, t, policy=None):
    """
    Delta integral of f over [s, t): mu(r) * f(r) summed over right-scattered r,
    plus quadrature over dense parts.  For t < s the sign is reversed.
    """
    policy = policy or GridPolicy()
    s, t = ts.snap(s), ts.snap(t)
    if t < s:
        return -delta_integral(ts, f, t, s, policy)
    total = 0.0
    for piece in pieces(ts, s, t, closed=False):
        if isinstance(piece, DenseRun):
            total += quad(f, piece.lo, piece.hi, policy)
        else:
            vals = np.array([f(r) for r in piece.points], dtype=float)
            total += float(np.sum(piece.mus * vals))
    return total


def delta_derivative(ts, f, t, policy=None):
    policy = policy or GridPolicy()
    i, n, t = ts.locate(t)
    step = sigma(ts, t) - t
    if step > 0:
        return (f(t + step) - f(t)) / step
    seg = ts.segments[i]
    right = seg.b - t
    left = t - seg.a
    if right <= 0:
        raise NotDifferentiablePoint(f"{t} is a left-scattered maximum")
    if left > 0:
        h = min(policy.dense_step, left, right)
        return (f(t + h) - f(t - h)) / (2 * h)
    h = min(policy.dense_step, right / 2)
    return (-3 * f(t) + 4 * f(t + h) - f(t + 2 * h)) / (2 * h)


def _dense_samples(lo, hi, step):
    n = max(1, math.ceil((hi - lo) / step - 1e-9))
    return np.linspace(lo, hi, n + 1)


def iterate_points(ts, s, t, policy=None):
    """
    Every right-scattered point of [s, t] plus dense segments sampled at
    policy.dense_step, as an increasing list of (point, PointKind).
    """
    policy = policy or GridPolicy()
    s, t = ts.snap(s), ts.snap(t)
    if t < s:
        raise EmptyWindow(f"{s} is after {t}")
    out = []

    def push(x, kind):
        if out and x <= out[-1][0] + _tol(x, ts.rtol):
            # a dense sample coinciding with a scattered endpoint takes its kind
            if kind.is_scattered():
                out[-1] = (out[-1][0], kind)
            return
        out.append((float(x), kind))

    for piece in pieces(ts, s, t, closed=True):
        if isinstance(piece, DenseRun):
            for x in _dense_samples(piece.lo, piece.hi, policy.dense_step):
                push(x, PointKind.Dense)
        else:
            for x in piece.points:
                push(x, PointKind.Scattered)
    if not out:
        out.append((s, PointKind.Scattered if mu(ts, s) > 0 else PointKind.Dense))
    return out


def sample_points(ts, rng, lo, hi, count, policy=None):
    """ draw count points of ts within [lo, hi]; scattered points and dense draws mixed """
    policy = policy or GridPolicy()
    runs = list(pieces(ts, lo, hi, closed=True))
    if not runs:
        raise EmptyWindow(f"no points of the time scale in [{lo}, {hi}]")
    out = []
    for _ in range(count):
        piece = runs[rng.integers(len(runs))]
        if isinstance(piece, DenseRun):
            out.append(float(rng.uniform(piece.lo, piece.hi)))
        else:
            out.append(float(piece.points[rng.integers(piece.points.size)]))
    return out


def reals():
    return TimeScale((DenseInterval(-INF, INF),), label="R")


def integers(start=-1000):
    return TimeScale((ArithmeticGrid(start, 1.0),), label="Z")


def h_integers(h, start=-1000):
    return TimeScale((ArithmeticGrid(start * h, h),), label=f"{h}Z")


def q_integers(q, nmin=None):
    """ q^Z, with the cluster point 0 when nmin is None """
    return TimeScale((GeometricGrid(q, nmin),), label=f"{q}^Z", t_star_lower=0.0)


def q_naturals(q, below=8):
    """ q^N together with q^-1 .. q^-below so delay windows under 1 are covered """
    return TimeScale((GeometricGrid(q, -below),), label=f"{q}^N", t_star_lower=0.0)


def sqrt_naturals():
    return TimeScale((SqrtGrid(0),), label="N^1/2", t_star_lower=0.0)


def mixed(step=0.5, dense=(-1.0, 1.0)):
    """ a dense interval followed by an arithmetic grid starting one step after it """
    a, b = dense
    return TimeScale(
        (DenseInterval(a, b), ArithmeticGrid(b + step, step)), label=f"[{a},{b}]+{step}Z"
    )


def gap_scale():
    """ (-inf, 0] U [1, inf), which admits no delay function """
    return TimeScale((DenseInterval(-INF, 0.0), DenseInterval(1.0, INF)), label="gap")

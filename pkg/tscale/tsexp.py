"""
The exponential function of a time scale, e_p(t, s).

e_p(t, s) = exp( integral over [s, t) of xi_mu(r)(p(r)) ), where the cylinder
transform xi_mu(z) is log(1 + mu z) / mu at right-scattered points and z on
dense parts.  Everything is accumulated in log space.
"""
import logging
import math
import numpy as np
from .base import GridPolicy, Report, close
from .coefficients import Coefficient
from .exceptions import NegativeOneplus, NotRegressive, PreconditionViolated
from .timescale import DenseRun, delta_derivative, delta_integral, mu, pieces, quad, sigma

logger = logging.getLogger(__name__)

REGRESSIVE_EPS = 1e-14
IDENTITY_RTOL = 1e-9
DERIVATIVE_RTOL = 1e-6


def _coerce(p):
    if isinstance(p, (Coefficient, np.ndarray)):
        return p
    return Coefficient.of(p)


def _log_oneplus(mus, vals, where):
    z = 1.0 + mus * vals
    if np.any(np.abs(z) <= REGRESSIVE_EPS):
        raise NotRegressive(f"1 + mu*p vanishes {where}")
    if np.any(z < 0):
        raise NegativeOneplus(f"1 + mu*p is negative {where}")
    return np.log(z)


def log_exp(ts, p, t, s, policy=None):
    """
    log e_p(t, s).  p may be a Coefficient, a number, or a numpy array of
    constant rates, in which case an array of logs is returned.
    """
    policy = policy or GridPolicy()
    p = _coerce(p)
    t, s = ts.snap(t), ts.snap(s)
    if t < s:
        return -log_exp(ts, p, s, t, policy)
    vector = isinstance(p, np.ndarray)
    total = np.zeros_like(p, dtype=float) if vector else 0.0
    for piece in pieces(ts, s, t, closed=False):
        where = f"on [{s}, {t})"
        if isinstance(piece, DenseRun):
            if vector or p.is_constant:
                rate = p if vector else p.value
                total = total + rate * (piece.hi - piece.lo)
            else:
                total += quad(p, piece.lo, piece.hi, policy)
        elif vector:
            logs = _log_oneplus(piece.mus[:, None], p[None, :], where)
            total = total + np.sum(logs, axis=0)
        else:
            if p.is_constant:
                vals = np.full(piece.points.size, p.value)
            else:
                vals = np.array([p(r) for r in piece.points], dtype=float)
            total += float(np.sum(_log_oneplus(piece.mus, vals, where)))
    return total


def exp_ts(ts, p, t, s, policy=None):
    """ e_p(t, s); exactly 1 when t == s """
    if ts.snap(t) == ts.snap(s):
        return 1.0
    return math.exp(log_exp(ts, p, t, s, policy))


def exp_power(ts, p, t, s, alpha, policy=None):
    """ e_p(t, s) ** alpha, computed as exp(alpha * log e_p(t, s)) """
    return math.exp(alpha * log_exp(ts, p, t, s, policy))


def ominus(p, ts, t):
    """ (-)p at t: -p / (1 + mu p) """
    value = Coefficient.of(p)(t)
    z = 1.0 + mu(ts, t) * value
    if abs(z) <= REGRESSIVE_EPS:
        raise NotRegressive(f"1 + mu*p vanishes at {t}")
    return -value / z


def oplus(p, q, ts, t):
    """ p (+) q at t: p + q + mu p q """
    a, b = Coefficient.of(p)(t), Coefficient.of(q)(t)
    return a + b + mu(ts, t) * a * b


def ominus_coefficient(ts, p):
    p = Coefficient.of(p)
    return Coefficient(func=lambda t: ominus(p, ts, t), label=f"ominus({p.label})")


def regressivity_margin(ts, p, s, t):
    """ smallest 1 + mu(r) p(r) over the right-scattered points of [s, t); 1.0 if none """
    p = Coefficient.of(p)
    best = 1.0
    for piece in pieces(ts, s, t, closed=False):
        if isinstance(piece, DenseRun):
            continue
        vals = np.array([p(r) for r in piece.points], dtype=float)
        best = min(best, float(np.min(1.0 + piece.mus * vals)))
    return best


def check_exp_identities(ts, p, triples, policy=None):
    """
    Evaluate the algebraic identities of e_p at each (t, s, r) triple and
    return a Report naming every identity that failed.
    """
    policy = policy or GridPolicy()
    p = Coefficient.of(p)
    neg = ominus_coefficient(ts, p)
    report = Report("exponential identities")
    for t, s, r in triples:
        e_ts = exp_ts(ts, p, t, s, policy)
        e_st = exp_ts(ts, p, s, t, policy)
        e_sr = exp_ts(ts, p, s, r, policy)
        e_tr = exp_ts(ts, p, t, r, policy)

        report.check("e_p(t,t) = 1").record(
            exp_ts(ts, p, t, t, policy) == 1.0, witness=t, detail=f"e_p({t},{t}) != 1"
        )

        step = mu(ts, t)
        if step > 0:
            lhs = exp_ts(ts, p, sigma(ts, t), s, policy)
            rhs = (1 + step * p(t)) * e_ts
            report.check("e_p(sigma(t),s) = (1 + mu p) e_p(t,s)").record(
                close(lhs, rhs, IDENTITY_RTOL), margin=-abs(lhs - rhs), witness=(t, s),
                detail=f"{lhs} != {rhs}",
            )

        recip = exp_ts(ts, neg, t, s, policy)
        report.check("e_ominus_p(t,s) = 1 / e_p(t,s)").record(
            close(recip, 1.0 / e_ts, IDENTITY_RTOL), margin=-abs(recip - 1.0 / e_ts),
            witness=(t, s), detail=f"{recip} != {1.0 / e_ts}",
        )

        report.check("e_p(t,s) e_p(s,t) = 1").record(
            close(e_ts * e_st, 1.0, IDENTITY_RTOL), margin=-abs(e_ts * e_st - 1.0),
            witness=(t, s), detail=f"product is {e_ts * e_st}",
        )

        report.check("e_p(t,s) e_p(s,r) = e_p(t,r)").record(
            close(e_ts * e_sr, e_tr, IDENTITY_RTOL), margin=-abs(e_ts * e_sr - e_tr),
            witness=(t, s, r), detail=f"{e_ts * e_sr} != {e_tr}",
        )

        deriv = delta_derivative(ts, lambda u: 1.0 / exp_ts(ts, p, u, s, policy), t, policy)
        expected = -p(t) / exp_ts(ts, p, sigma(ts, t), s, policy)
        rtol = IDENTITY_RTOL if step > 0 else DERIVATIVE_RTOL
        report.check("(1/e_p(.,s))^delta = -p / e_p(sigma(.),s)").record(
            close(deriv, expected, rtol), margin=-abs(deriv - expected), witness=(t, s),
            detail=f"{deriv} != {expected}",
        )
    return report


def exp_bounds_check(ts, phi, s, t, policy=None):
    """
    Check the integral bounds of e_phi and e_(-phi) over [s, t] for phi >= 0
    with -phi positively regressive:

        1 - I <= e_(-phi)(t, s) <= exp(-I),   1 + I <= e_phi(t, s) <= exp(I)

    with I the delta integral of phi over [s, t).
    """
    policy = policy or GridPolicy()
    phi = Coefficient.of(phi)
    neg = Coefficient(func=lambda r: -phi(r), label=f"-{phi.label}")
    if phi.is_constant:
        neg = Coefficient.const(-phi.value)
    margin = regressivity_margin(ts, neg, s, t)
    if margin <= 0:
        raise PreconditionViolated(f"-phi is not positively regressive on [{s}, {t}]")
    integral = delta_integral(ts, phi, s, t, policy)
    if integral < -1e-15:
        raise PreconditionViolated(f"phi must be nonnegative, integral is {integral}")
    slack = 1e-12 * max(1.0, abs(integral))
    e_neg = exp_ts(ts, neg, t, s, policy)
    e_pos = exp_ts(ts, phi, t, s, policy)

    report = Report("exponential bounds")
    pairs = [
        ("1 - I <= e_(-phi)", e_neg - (1.0 - integral)),
        ("e_(-phi) <= exp(-I)", math.exp(-integral) - e_neg),
        ("1 + I <= e_phi", e_pos - (1.0 + integral)),
        ("e_phi <= exp(I)", math.exp(integral) - e_pos),
    ]
    for name, value in pairs:
        report.check(name).record(value >= -slack, margin=value, witness=(s, t),
                                  detail=f"margin {value:g}")
    report.check("e_(-phi) > 0").record(e_neg > 0, margin=e_neg, witness=(s, t))
    logger.debug("bounds on [%g, %g]: I=%g e_neg=%g e_pos=%g", s, t, integral, e_neg, e_pos)
    return report

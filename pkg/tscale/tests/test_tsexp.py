import math
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import floats, integers as ints
from ..coefficients import Coefficient
from ..exceptions import NegativeOneplus, NotRegressive, PreconditionViolated
from ..timescale import h_integers, integers, mixed, q_integers, q_naturals, reals, sample_points
from ..tsexp import (
    check_exp_identities,
    exp_bounds_check,
    exp_power,
    exp_ts,
    log_exp,
    ominus,
    oplus,
    regressivity_margin,
)


def test_exp_on_integers_is_a_power():
    assert exp_ts(integers(), 0.5, 5, 0) == pytest.approx(1.5 ** 5, rel=1e-12)
    assert exp_ts(integers(), 0.5, 0, 5) == pytest.approx(1.5 ** -5, rel=1e-12)


def test_exp_on_q_integers_is_a_product():
    assert exp_ts(q_integers(2), 1.0, 4, 1) == pytest.approx(6.0, rel=1e-12)


def test_exp_on_reals():
    assert exp_ts(reals(), -0.3, 2.0, 0.0) == pytest.approx(math.exp(-0.6), rel=1e-12)
    p = Coefficient(func=lambda t: t, label="t")
    assert exp_ts(reals(), p, 1.0, 0.0) == pytest.approx(math.exp(0.5), rel=1e-9)


def test_exp_at_equal_times_is_exactly_one():
    assert exp_ts(mixed(), 0.7, 1.5, 1.5) == 1.0


def test_exp_on_mixed_scale():
    # dense [0, 1], then the jumps at 1 and 1.5 of size 0.5
    expected = math.exp(0.5) * 1.25 * 1.25
    assert exp_ts(mixed(), 0.5, 2.0, 0.0) == pytest.approx(expected, rel=1e-10)


def test_vectorized_rates_match_scalar_calls():
    ks = np.array([-0.5, -0.1, 0.0, 0.3])
    logs = log_exp(integers(), ks, 4, 1)
    for k, value in zip(ks, logs):
        assert value == pytest.approx(log_exp(integers(), float(k), 4, 1), abs=1e-14)


def test_exp_power():
    assert exp_power(integers(), 0.5, 2, 0, 0.5) == pytest.approx(1.5, rel=1e-12)


def test_ominus_and_oplus():
    assert ominus(0.5, integers(), 3) == pytest.approx(-1 / 3)
    assert ominus(0.5, reals(), 3) == -0.5
    assert oplus(0.5, 0.5, integers(), 3) == pytest.approx(1.25)
    assert oplus(0.5, ominus(0.5, integers(), 3), integers(), 3) == pytest.approx(0.0, abs=1e-15)


def test_non_regressive_rates():
    with pytest.raises(NotRegressive):
        log_exp(integers(), -1.0, 3, 0)
    with pytest.raises(NegativeOneplus):
        log_exp(integers(), -2.0, 3, 0)
    assert regressivity_margin(integers(), -0.5, 0, 3) == pytest.approx(0.5)
    assert regressivity_margin(reals(), -5.0, 0, 3) == 1.0


@pytest.mark.parametrize(
    "ts,p,triples",
    [
        (integers(), 0.5, [(5, 3, 0), (2, 7, -1), (0, 0, 4)]),
        (integers(), -0.4, [(3, 0, 2), (-2, 4, 1)]),
        (q_integers(2), Coefficient(func=lambda t: 1 / t, label="1/t"), [(8, 1, 4), (2, 16, 0.5)]),
        (mixed(), 0.5, [(2.0, 0.0, 1.5), (0.5, -0.5, 1.0)]),
    ],
)
def test_exp_identities(ts, p, triples):
    report = check_exp_identities(ts, p, triples)
    assert report.passed, [(c.name, c.detail) for c in report.failures()]


def constant_rates(rng, lo, hi):
    return float(rng.uniform(lo, hi))


def reciprocal_rates(rng, lo, hi):
    c = float(rng.uniform(lo, hi))
    return Coefficient(func=lambda t: c / t, label=f"{c}/t")


@pytest.mark.parametrize(
    "ts,window,rates,bounds",
    [
        (integers(), (-10, 10), constant_rates, (-0.9, 1.5)),
        (h_integers(0.5), (-10, 10), constant_rates, (-1.5, 1.5)),
        (q_naturals(2), (0.25, 64), reciprocal_rates, (-0.9, 1.5)),
        (reals(), (-5, 5), constant_rates, (-1.5, 1.5)),
        (mixed(), (-1, 6), constant_rates, (-0.9, 1.5)),
    ],
    ids=["Z", "hZ", "2^N", "R", "mixed"],
)
def test_exp_identities_at_random_points(ts, window, rates, bounds):
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = rates(rng, *bounds)
        points = sample_points(ts, rng, *window, 60)
        triples = list(zip(points[0::3], points[1::3], points[2::3]))
        report = check_exp_identities(ts, p, triples)
        assert report.passed, [(c.name, c.witness, c.detail) for c in report.failures()]
        assert report.check("e_p(t,s) e_p(s,r) = e_p(t,r)").samples == 20


def test_sigma_identity_on_q_integers_is_exact():
    # 1 + mu(t) / t = q for p(t) = 1/t
    ts = q_integers(2)
    p = Coefficient(func=lambda t: 1 / t, label="1/t")
    assert exp_ts(ts, p, 8, 4) == pytest.approx(2.0, rel=1e-14)


def test_exp_bounds_on_integers():
    report = exp_bounds_check(integers(), 0.5, 0, 4)
    assert report.passed
    assert report.check("e_(-phi) <= exp(-I)").worst_margin == pytest.approx(
        math.exp(-2) - 0.0625
    )
    assert report.check("1 + I <= e_phi").worst_margin == pytest.approx(5.0625 - 3.0)


def test_exp_bounds_on_reals():
    report = exp_bounds_check(reals(), 0.25, 0.0, 2.0)
    assert report.passed


def test_exp_bounds_need_positive_regressivity():
    with pytest.raises(PreconditionViolated):
        exp_bounds_check(integers(), 1.0, 0, 4)


@settings(deadline=None, max_examples=50)
@given(floats(-0.9, 3.0), ints(-20, 20), ints(-20, 20))
def test_exp_on_integers_matches_closed_form(p, t, s):
    value = exp_ts(integers(), p, t, s)
    assert value == pytest.approx((1 + p) ** (t - s), rel=1e-9)
    assert value * exp_ts(integers(), p, s, t) == pytest.approx(1.0, rel=1e-9)


@settings(deadline=None, max_examples=50)
@given(floats(-0.9, 3.0), ints(-10, 10), ints(-10, 10), ints(-10, 10))
def test_semigroup_on_integers(p, t, s, r):
    ts = integers()
    lhs = exp_ts(ts, p, t, s) * exp_ts(ts, p, s, r)
    assert lhs == pytest.approx(exp_ts(ts, p, t, r), rel=1e-9)

import math
import numpy as np
import pytest
from scipy.optimize import brentq
from ..base import Family, Form
from ..exceptions import NoSignChange, OutsideS
from ..halanay import (
    HalanayProblem,
    char_at_zero,
    char_poly,
    classical_char,
    largest_root,
    qn_char_poly,
    root_field,
    root_field_async,
    root_grid,
    s_window,
)
from ..shifts import DelaySpec, builtin_shift
from ..timescale import integers, q_integers, reals

# largest root of k^2 + 1.3k + 0.2
EX1_ROOT = (-1.3 + math.sqrt(1.69 - 0.8)) / 2


def sum_problem(ts, family, delays, p, q, **kwargs):
    spec = DelaySpec(builtin_shift(family, ts), delays)
    return HalanayProblem(spec, Form.SumPower, p, q, **kwargs)


@pytest.fixture
def ex1():
    return sum_problem(integers(), Family.Translation, [1], 0.5, [0.2, 0.1], Kconst=2.0)


@pytest.fixture
def delay_equation():
    return sum_problem(reals(), Family.Translation, [1], 2.0, [0.0, 1.0])


@pytest.fixture
def geometric():
    return sum_problem(q_integers(2), Family.Scaling, [2], 0.6, [0.0, 0.3])


def test_problem_validation(ex1):
    spec = ex1.spec
    with pytest.raises(ValueError):
        HalanayProblem(spec, Form.SumPower, 0.5, [0.2])
    with pytest.raises(ValueError):
        HalanayProblem(spec, Form.SumPower, 0.5, [0.2, 0.1], ell=1.5)
    with pytest.raises(ValueError):
        HalanayProblem(spec, Form.SumPower, 0.5, [0.2, 0.1], Kconst=0.5)
    with pytest.raises(ValueError):
        HalanayProblem(spec, Form.ProductForm, 0.5, [0.2, 0.1], alpha=[0.5, 0.6])
    with pytest.raises(ValueError):
        HalanayProblem(spec, Form.SupForm, 0.5, [0.2, 0.1])


def test_problem_window(ex1):
    assert ex1.window_start == -1.0
    assert ex1.anchor(5) == 4.0
    assert ex1.is_local


def test_sup_form_tau_defaults_to_largest_delay(ex1):
    problem = HalanayProblem(ex1.spec, Form.SupForm, 0.5, [0.2])
    assert problem.tau == 1.0


def test_s_window(ex1, geometric):
    assert s_window(ex1, 7) == (-1.0, 0.0)
    assert s_window(geometric, 2) == (-0.5, 0.0)


def test_char_poly_on_integers(ex1):
    for k in (-0.9, -0.5, -0.1, 0.0, 0.4):
        expected = (k + 0.5) * (1 + k) - (0.2 * (1 + k) + 0.1)
        assert char_poly(ex1, 3, k) == pytest.approx(expected, abs=1e-14)
    assert char_at_zero(ex1, 3) == pytest.approx(0.2)


def test_char_poly_on_reals(delay_equation):
    value = char_poly(delay_equation, 2.0, -0.4)
    assert value * math.exp(0.4) == pytest.approx(-0.4 + 2 - math.exp(0.4), rel=1e-12)


def test_char_poly_matches_closed_form_on_q_integers(geometric):
    for t in (2.0, 4.0, 8.0):
        for k in (-0.08, -0.03, 0.1):
            expected = qn_char_poly(2, 0.6, 0.0, 0.3, t, k)
            assert char_poly(geometric, t, k) == pytest.approx(expected, abs=1e-13)


def test_char_poly_outside_s(ex1):
    with pytest.raises(OutsideS):
        char_poly(ex1, 3, -1.5)


def test_largest_root_on_integers(ex1):
    result = largest_root(ex1, 5)
    assert result.value == pytest.approx(EX1_ROOT, abs=1e-8)
    assert result.residual < 1e-10
    assert result.s_lower == -1.0


def test_largest_root_on_reals(delay_equation):
    expected = brentq(lambda k: classical_char(2.0, [0.0, 1.0], [0.0, 1.0], k), -1, 0)
    result = largest_root(delay_equation, 1.0)
    assert result.value == pytest.approx(-0.4428, abs=1e-4)
    assert result.value == pytest.approx(expected, abs=1e-8)


def test_largest_root_on_q_integers(geometric):
    roots = [largest_root(geometric, t) for t in (2.0, 4.0, 8.0)]
    assert roots[0].value == pytest.approx((-1.6 + math.sqrt(1.36)) / 2, abs=1e-8)
    assert len({round(r.value, 8) for r in roots}) == 3
    for r in roots:
        assert r.residual < 1e-10
        assert r.s_lower < r.value < 0


@pytest.mark.parametrize("name,t", [("ex1", 5.0), ("delay_equation", 2.0), ("geometric", 4.0)])
def test_no_root_between_largest_root_and_zero(request, name, t):
    problem = request.getfixturevalue(name)
    root = largest_root(problem, t).value
    for k in np.linspace(root + 1e-6, 0.0, 400):
        assert char_poly(problem, t, k) > 0, k


def test_root_does_not_depend_on_K_when_linear(ex1):
    stiff = sum_problem(integers(), Family.Translation, [1], 0.5, [0.2, 0.1], Kconst=10.0)
    assert largest_root(stiff, 5).value == largest_root(ex1, 5).value


def test_sup_form_root(ex1):
    problem = HalanayProblem(ex1.spec, Form.SupForm, 0.5, [0.2])
    # (k + 0.5)(1 + k) - 0.2
    assert largest_root(problem, 4).value == pytest.approx(
        (-1.5 + math.sqrt(2.25 - 1.2)) / 2, abs=1e-8
    )


def test_product_form_root(ex1):
    problem = HalanayProblem(ex1.spec, Form.ProductForm, 0.5, [0.2, 0.3], alpha=[0.5, 0.5])
    result = largest_root(problem, 4)
    k = result.value
    assert -1 < k < 0
    assert (k + 0.5) * (1 + k) - 0.06 * math.sqrt(1 + k) == pytest.approx(0.0, abs=1e-9)


def test_no_root_without_positive_margin(ex1):
    problem = HalanayProblem(ex1.spec, Form.SumPower, 0.2, [0.2, 0.1])
    with pytest.raises(NoSignChange):
        largest_root(problem, 3)
    field = root_field(problem, [1.0, 2.0])
    assert field.partial
    assert set(field.errors) == {1.0, 2.0}


def test_root_grid(ex1):
    assert root_grid(ex1, 5, 0.1) == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]


def test_root_field_is_constant_on_integers(ex1):
    field = root_field(ex1, [float(t) for t in range(0, 30)])
    assert not field.partial
    assert field.is_constant()
    assert field.rate_at(12.5) == pytest.approx(EX1_ROOT, abs=1e-8)
    assert field.jumps == []


def test_root_field_varies_on_q_integers(geometric):
    field = root_field(geometric, [2.0, 4.0, 8.0])
    assert not field.is_constant()
    assert field.lambdas == sorted(field.lambdas)
    assert field.jumps == []


@pytest.mark.asyncio
async def test_root_field_async_matches(ex1):
    grid = [float(t) for t in range(0, 12)]
    field = await root_field_async(ex1, grid, workers=3)
    assert field.grid == grid
    assert field.lambdas == pytest.approx(root_field(ex1, grid).lambdas, abs=1e-12)

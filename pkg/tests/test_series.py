import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from nijtoep import series as S
from nijtoep.errors import DomainViolation, NonUnitDivisor, OrderMismatch
from nijtoep.series import TruncatedSeries, series_apply, series_arith

coef = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def series_strategy(order, unit=False):
    lead = st.floats(0.5, 2.0) if unit else coef
    return st.tuples(lead, st.lists(coef, min_size=order - 1, max_size=order - 1)).map(
        lambda x: TruncatedSeries([x[0]] + x[1], order)
    )


def poly_mul_truncated(a, b, n):
    return np.convolve(a, b)[:n]


def sympy_coeffs(expr, t, n):
    ser = sp.series(expr, t, 0, n).removeO()
    return np.array([float(ser.coeff(t, k)) for k in range(n)])


def test_square_of_one_plus_t():
    a = TruncatedSeries([1.0, 1.0, 0.0])
    assert (a * a).coeffs == (1.0, 2.0, 1.0)


def test_division_inverts_multiplication():
    a = TruncatedSeries([1.0, 2.0, 3.0, 4.0])
    b = TruncatedSeries([2.0, -1.0, 0.5, 0.0])
    np.testing.assert_allclose(((a * b) / b).coeffs, a.coeffs, atol=1e-14)


def test_order_mismatch():
    with pytest.raises(OrderMismatch):
        series_arith(TruncatedSeries([1.0, 2.0]), TruncatedSeries([1.0, 2.0, 3.0]), "add")


def test_non_unit_divisor():
    with pytest.raises(NonUnitDivisor):
        series_arith(TruncatedSeries([1.0, 1.0]), TruncatedSeries([0.0, 1.0]), "div")


def test_log_and_sqrt_need_positive_constant():
    with pytest.raises(DomainViolation):
        series_apply("log", TruncatedSeries([-1.0, 1.0]))
    with pytest.raises(DomainViolation):
        series_apply("sqrt", TruncatedSeries([0.0, 1.0]))


def test_shift_truncates():
    a = TruncatedSeries([1.0, 2.0, 3.0])
    assert a.shift(1).coeffs == (0.0, 1.0, 2.0)
    assert a.shift(3).coeffs == (0.0, 0.0, 0.0)


def test_non_finite_coefficients_rejected():
    with pytest.raises(ValueError):
        TruncatedSeries([1.0, float("nan")])


@pytest.mark.parametrize("name", ["exp", "log", "sin", "cos", "sqrt"])
def test_elementary_against_sympy(name):
    t = sp.symbols("t")
    c = [1.3, -0.4, 0.7, 0.2, -1.1, 0.05]
    poly = sum(sp.Float(ci) * t**k for k, ci in enumerate(c))
    expected = sympy_coeffs(getattr(sp, name)(poly), t, len(c))
    got = series_apply(name, TruncatedSeries(c))
    np.testing.assert_allclose(got.coeffs, expected, rtol=1e-12, atol=1e-12)


def test_powi_matches_repeated_product():
    a = TruncatedSeries([0.5, 1.0, -2.0, 3.0, 0.25])
    expected = TruncatedSeries.constant(1.0, 5)
    for _ in range(7):
        expected = expected * a
    np.testing.assert_allclose(series_apply("powi", a, 7).coeffs, expected.coeffs, rtol=1e-13)
    assert series_apply("powi", a, 0).coeffs == (1.0, 0.0, 0.0, 0.0, 0.0)


def test_array_coefficients_evaluate_in_lockstep():
    x = np.linspace(0.1, 2.0, 7)
    s = S.exp(TruncatedSeries.variable(x, 3))
    np.testing.assert_allclose(s.coeffs[0], np.exp(x))
    np.testing.assert_allclose(s.coeffs[1], np.exp(x))
    np.testing.assert_allclose(s.coeffs[2], np.exp(x) / 2)


def test_nested_levels_give_mixed_partials():
    # f(u + eps) expanded in t: t-coefficients carry d/du through the inner jet
    u = TruncatedSeries.variable(0.3, 2, level=-1)
    p = TruncatedSeries([u, 1.0, 0.0], level=0)  # u + t
    out = S.sin(p)
    # coefficient of t^2 is -sin(u)/2; its eps part is -cos(u)/2
    c2 = out.coeffs[2]
    assert math.isclose(c2.coeffs[0], -math.sin(0.3) / 2, rel_tol=1e-14)
    assert math.isclose(c2.coeffs[1], -math.cos(0.3) / 2, rel_tol=1e-14)


@settings(max_examples=60, deadline=None)
@given(series_strategy(5), series_strategy(5))
def test_product_matches_truncated_convolution(a, b):
    np.testing.assert_allclose((a * b).coeffs, poly_mul_truncated(a.coeffs, b.coeffs, 5), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(series_strategy(4), series_strategy(4), series_strategy(4))
def test_ring_axioms(a, b, c):
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-11)
    np.testing.assert_allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=1e-11)
    np.testing.assert_allclose((a - a).coeffs, np.zeros(4))


@settings(max_examples=60, deadline=None)
@given(series_strategy(5, unit=True))
def test_log_exp_round_trip(a):
    np.testing.assert_allclose(S.exp(S.log(a)).coeffs, a.coeffs, rtol=1e-10, atol=1e-10)
    r = S.sqrt(a)
    np.testing.assert_allclose((r * r).coeffs, a.coeffs, rtol=1e-10, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(series_strategy(5))
def test_pythagoras(a):
    s, c = S.sin(a), S.cos(a)
    np.testing.assert_allclose((s * s + c * c).coeffs, [1.0, 0, 0, 0, 0], atol=1e-10)

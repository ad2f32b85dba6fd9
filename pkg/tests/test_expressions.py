import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nijtoep.errors import ExpressionSyntaxError, UnknownFunction, UnknownVariable
from nijtoep.expressions import Var, as_expression, parse, to_text
from nijtoep.series import TruncatedSeries

CASES = [
    "1 + 2*x",
    "-x^2",
    "(-x)^2",
    "x - y - z",
    "x - (y - z)",
    "x / y / 2",
    "x / (y * 2)",
    "exp(sin(x) * cos(y)) - log(1 + x^2)",
    "sqrt(2 + x*y)^3",
    "2.5e-1 * x + .5",
    "pi * x",
    "-(x + y)^2 * -3",
]


def python_oracle(text, x, y, z=0.7):
    src = text.replace("^", "**")
    env = {"x": x, "y": y, "z": z, "pi": math.pi, **{f: getattr(math, f) for f in ("exp", "log", "sin", "cos", "sqrt")}}
    return eval(src, {"__builtins__": {}}, env)


@pytest.mark.parametrize("text", CASES)
def test_evaluation_matches_python(text):
    e = parse(text, ("x", "y", "z"))
    for x, y in [(0.3, 0.9), (1.7, 0.2)]:
        assert math.isclose(e(x, y, 0.7), python_oracle(text, x, y), rel_tol=1e-14, abs_tol=1e-14)


@pytest.mark.parametrize("text", CASES)
def test_print_parse_round_trip(text):
    e = parse(text, ("x", "y", "z"))
    again = parse(to_text(e.ast), ("x", "y", "z"))
    assert again.ast == e.ast


def test_unary_minus_binds_looser_than_power():
    e = parse("-x^2", ("x",))
    assert e(3.0) == -9.0


def test_chained_powers_apply_left_to_right():
    # exponents are literals, so x^2^3 can only mean (x^2)^3
    assert parse("x^2^3", ("x",))(2.0) == 64.0


@pytest.mark.parametrize(
    "text, offset",
    [("1 +* x", 3), ("(x + 1", 6), ("x ^ 1.5", 4), ("x $ 2", 2), ("", 0), ("x y", 2)],
)
def test_syntax_errors_report_offsets(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(text, ("x", "y"))
    assert info.value.offset == offset


def test_offset_is_in_bytes():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("x + é", ("x",))
    assert info.value.offset == 4


def test_unknown_names():
    with pytest.raises(UnknownVariable):
        parse("x + w", ("x",))
    with pytest.raises(UnknownFunction):
        parse("tan(x)", ("x",))


def test_array_and_series_evaluation():
    e = parse("x^2 * exp(x)", ("x",))
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(e(x), x**2 * np.exp(x))
    s = e(TruncatedSeries.variable(1.0, 3))
    # d/dx (x^2 e^x) = (x^2 + 2x) e^x ; second coefficient is f''/2 = (x^2 + 4x + 2) e^x / 2
    np.testing.assert_allclose(s.coeffs, [math.e, 3 * math.e, 3.5 * math.e], rtol=1e-14)


def test_symbolic_evaluation_builds_expression():
    e = parse("x*y + 0*x + 1*y", ("x", "y"))
    built = e(Var("a"), Var("b"))
    assert to_text(built) == "a * b + b"


def test_as_expression_accepts_numbers_and_renames():
    assert as_expression(3, ("x",))(5.0) == 3.0
    e = parse("x + 1", ("x",)).renamed({"x": "u2"}, ("u1", "u2"))
    assert e(10.0, 2.0) == 3.0


leaf = st.one_of(st.sampled_from(["x", "y"]), st.integers(0, 9).map(str))


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-{c}"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: f"{t[0]}({t[1]})"),
    )


@settings(max_examples=150, deadline=None)
@given(st.recursive(leaf, _combine, max_leaves=8))
def test_random_round_trip(text):
    e = parse(text, ("x", "y"))
    printed = to_text(e.ast)
    assert parse(printed, ("x", "y")).ast == e.ast
    a, b = e(0.4, -0.3), python_oracle(text, 0.4, -0.3)
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)

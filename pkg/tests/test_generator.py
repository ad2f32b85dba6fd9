import numpy as np
import pytest
import sympy as sp

from nijtoep.errors import ArityMismatch, RegularityViolation
from nijtoep.field import eval_field
from nijtoep.generator import certify, generate_operator, sample_points, to_direct
from nijtoep.field import OperatorFieldSpec

rng = np.random.default_rng(8)


def sympy_generated(n, f_texts, fn_text, point):
    """Coefficients of sum_i f_i(p(t), q(t)) t^{n-i} + f_n(p(t)) by sympy series."""
    t, p, q, x = sp.symbols("t p q x")
    u = [sp.Float(v) for v in point]
    pt = sum(u[n - 1 - k] * t**k for k in range(n))
    qt = sp.diff(pt, t)
    total = 0
    for i, text in enumerate(f_texts, start=1):
        fi = sp.sympify(text.replace("^", "**"), locals={"p": p, "q": q})
        total += fi.subs({p: pt, q: qt}, simultaneous=True) * t ** (n - i)
    if fn_text is not None:
        total += sp.sympify(fn_text.replace("^", "**"), locals={"x": x}).subs(x, pt)
    ser = sp.series(total, t, 0, n).removeO()
    return np.array([float(ser.coeff(t, n - i)) for i in range(1, n + 1)])


@pytest.mark.parametrize(
    "f, fn",
    [
        (["p*q + 1", "sin(p) - q^2", "exp(q)*p + 2"], "x^3 - x"),
        (["p^2", "1 + q"], None),
        (["cos(p*q) + q"], "exp(x)"),
    ],
)
def test_coefficients_match_sympy_expansion(f, fn):
    n = len(f) + 1
    spec = generate_operator(n, f + ([fn] if fn else []), include_f_n=fn is not None)
    for point in rng.uniform(0, 0.5, size=(3, n)):
        np.testing.assert_allclose(eval_field(spec, point).g, sympy_generated(n, f, fn, point), atol=1e-13)


def test_c_block_entries_for_n_4():
    """Entries of c(P, Q) J above the diagonal band, c(p, q) = p^2 q + q^3."""
    u1, u2, u3, u4 = 0.1, 0.2, 0.3, 0.4
    spec = generate_operator(4, ["0", "0", "p^2*q + q^3"], include_f_n=False)
    g = eval_field(spec, [u1, u2, u3, u4]).g
    p, q = u4, u3
    c, cp, cq = p**2 * q + q**3, 2 * p * q, p**2 + 3 * q**2
    cpp, cpq, cqq = 2 * q, 2 * p, 6 * q
    assert g[3] == 0.0
    assert g[2] == pytest.approx(c, rel=1e-14)
    assert g[1] == pytest.approx(cp * u3 + 2 * cq * u2, rel=1e-14)
    expected = cp * u2 + 3 * cq * u1 + 0.5 * cpp * u3**2 + 2 * cpq * u3 * u2 + 2 * cqq * u2**2
    assert g[0] == pytest.approx(expected, rel=1e-14)


def test_diagonal_depends_on_last_coordinate_only():
    spec = generate_operator(3, ["p*q", "1 + p", "sin(x)"])
    pts = rng.uniform(0, 0.5, size=(10, 3))
    np.testing.assert_allclose(eval_field(spec, pts).g[:, 2], np.sin(pts[:, 2]), rtol=1e-15)
    spec0 = generate_operator(3, ["p*q", "1 + p"], include_f_n=False)
    assert np.all(eval_field(spec0, pts).g[:, 2] == 0.0)


def test_argument_checks():
    with pytest.raises(ArityMismatch):
        generate_operator(3, ["p", "q"])
    with pytest.raises(ArityMismatch):
        generate_operator(3, ["p", "q", "x"], include_f_n=False)
    with pytest.raises(RegularityViolation):
        generate_operator(3, ["1", "p*q", "x"], require_regular=True)
    generate_operator(3, ["1", "2 + p", "x"], require_regular=True)


def test_to_direct_is_exact():
    spec = generate_operator(4, ["p*q - 1", "exp(p)", "2 + sin(q)", "x^2"])
    direct = to_direct(spec)
    assert direct.mode == "direct"
    pts = rng.uniform(0, 0.5, size=(20, 4))
    np.testing.assert_allclose(eval_field(direct, pts).g, eval_field(spec, pts).g, rtol=1e-14, atol=1e-15)
    assert to_direct(direct) is direct


def test_certify():
    pts = sample_points(3, 30, seed=1)
    assert certify(generate_operator(3, ["p^2 + q", "1 + p*q", "cos(x)"]), pts).passed
    bad = OperatorFieldSpec.direct(["u1*u2", "1 + u1", "u3"])
    cert = certify(bad, pts)
    assert not cert.passed and cert.max_torsion > 1e-3


def test_sample_points_reproducible():
    a = sample_points(4, 10, seed=3)
    np.testing.assert_array_equal(a, sample_points(4, 10, seed=3))
    assert a.min() >= 0.0 and a.max() <= 0.5

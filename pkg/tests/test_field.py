import numpy as np
import pytest
import sympy as sp

from nijtoep.errors import DimensionMismatch
from nijtoep.field import (
    OperatorFieldSpec,
    bracket,
    eval_field,
    haantjes_dense,
    haantjes_norm,
    jacobian_g,
    leibniz_residual,
    local_data,
    nijenhuis_dense,
    nijenhuis_torsion,
    structure_tensors,
    torsion_norm,
)
from nijtoep.generator import generate_operator

rng = np.random.default_rng(11)


# sympy oracle: torsions from Lie brackets of vector fields ---------------------


def sym_coords(n):
    return sp.symbols(f"u1:{n + 1}")


def lie(X, Y, u):
    return sp.Matrix([sum(X[a] * sp.diff(Y[k], u[a]) - Y[a] * sp.diff(X[k], u[a]) for a in range(len(u))) for k in range(len(u))])


def sym_nijenhuis(L, u):
    """N(d_i, d_j) = [L d_i, L d_j] - L[L d_i, d_j] - L[d_i, L d_j]."""
    n = len(u)
    e = [sp.Matrix([1 if a == i else 0 for a in range(n)]) for i in range(n)]
    out = {}
    for i in range(n):
        for j in range(n):
            Li, Lj = L * e[i], L * e[j]
            out[i, j] = lie(Li, Lj, u) - L * lie(Li, e[j], u) - L * lie(e[i], Lj, u)
    return out


def sym_toeplitz(g):
    n = len(g)
    return sp.Matrix(n, n, lambda i, j: g[n - 1 - (j - i)] if j >= i else 0)


def sym_components(T, n, point, u):
    subs = dict(zip(u, point))
    C = np.zeros((n, n, n))
    for (i, j), v in T.items():
        C[:, i, j] = [float(x.subs(subs)) for x in v]
    return C


def random_poly_text(names, r):
    terms = [f"{r.uniform(-1, 1):.3f}"]
    for _ in range(3):
        a, b = r.choice(names, 2)
        terms.append(f"{r.uniform(-1, 1):.3f}*{a}*{b}")
    terms.append(f"{r.uniform(-1, 1):.3f}*{r.choice(names)}")
    return " + ".join(terms)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_torsion_matches_lie_bracket_oracle(seed):
    r = np.random.default_rng(seed)
    n = 3
    names = [f"u{i}" for i in range(1, n + 1)]
    g = [random_poly_text(names, r) for _ in range(n)]
    u = sym_coords(n)
    L = sym_toeplitz([sp.sympify(x.replace("^", "**"), locals=dict(zip(names, u))) for x in g])
    point = r.uniform(0, 0.5, n)
    expected = sym_components(sym_nijenhuis(L, u), n, point, u)
    got = nijenhuis_torsion(OperatorFieldSpec.direct(g), point).components
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_torsion_with_zero_subdiagonal_coefficient():
    """With g_2 = 0 only N(d_1, d_3) and N(d_2, d_3) survive (and their negatives)."""
    spec = OperatorFieldSpec.direct(["1 + u1*u2", "0", "u1^2 + u2*u3"])
    u = np.array([0.3, 0.2, 0.4])
    g1, dg3_1, dg3_2 = 1 + 0.3 * 0.2, 2 * 0.3, 0.4
    N = nijenhuis_torsion(spec, u)
    e = np.eye(3)
    np.testing.assert_allclose(N(e[0], e[1]), 0.0, atol=1e-15)
    np.testing.assert_allclose(N(e[0], e[2]), -2 * g1 * dg3_1 * e[0], atol=1e-14)
    np.testing.assert_allclose(N(e[1], e[2]), -(g1 * dg3_2 * e[0] + g1 * dg3_1 * e[1]), atol=1e-14)
    np.testing.assert_allclose(N(e[2], e[0]), 2 * g1 * dg3_1 * e[0], atol=1e-14)


def test_degenerate_fields_are_nijenhuis_and_haantjes():
    pts = rng.uniform(0, 0.5, size=(25, 3))
    A = OperatorFieldSpec.direct(["u1*u2*u3", "0", "u3"])
    B = OperatorFieldSpec.direct(["0", "0", "1 + u1 + u2*u3"])
    for spec in (A, B):
        assert np.max(torsion_norm(spec, pts)) <= 1e-12
        assert np.max(haantjes_norm(spec, pts)) <= 1e-12


def test_torsion_equals_T_L_form():
    """<L, L> = T_L(L., .) - T_L(., L.) for Toeplitz fields."""
    spec = OperatorFieldSpec.direct(["u1*u3 - u2", "1 + u2^2", "u1*u2*u3", "sin(u4) + u1"])
    u = rng.uniform(0, 0.5, size=(5, 4))
    T, _ = structure_tensors(spec, u)
    L = local_data(spec, u).L
    TL = np.einsum("...kab,...ai->...kib", T.components, L) - np.einsum("...kab,...bj->...kaj", T.components, L)
    np.testing.assert_allclose(nijenhuis_torsion(spec, u).components, TL, atol=1e-13)


def test_structure_tensor_symmetries():
    spec = OperatorFieldSpec.direct(["u1*u3 - u2", "1 + u2^2", "u1*u2*u3", "u4^2 + u1"])
    u = rng.uniform(0, 0.5, size=(4, 4))
    T, M = structure_tensors(spec, u)
    Tc, Mc = T.components, M.components
    np.testing.assert_allclose(Tc, np.swapaxes(Tc, -1, -2), atol=1e-15)
    np.testing.assert_allclose(Mc, -np.swapaxes(Mc, -1, -2), atol=1e-15)
    J = np.eye(4, k=1)
    shifted = np.einsum("...kab,ai->...kib", Tc, J) - np.einsum("...kab,bj->...kaj", Tc, J)
    np.testing.assert_allclose(Mc, shifted, atol=1e-14)


def test_generated_fields_have_zero_structure_tensor_M():
    spec = generate_operator(4, ["p*q", "exp(p) - q", "1 + sin(q) + p^2", "x^3 + 2"])
    _, M = structure_tensors(spec, rng.uniform(0, 0.5, size=(10, 4)))
    assert np.max(np.abs(M.components)) < 1e-13


def test_haantjes_matches_oracle_on_general_operator():
    n = 3
    u = sym_coords(n)
    L = sp.Matrix([[u[0], u[1] * u[2], 1], [u[2] ** 2, u[1], u[0] * u[1]], [0, u[0] + u[2], 2 * u[2]]])
    N = sym_nijenhuis(L, u)
    e = [sp.Matrix([1 if a == i else 0 for a in range(n)]) for i in range(n)]

    def Nvec(X, Y):
        return sum((X[i] * Y[j] * N[i, j] for i in range(n) for j in range(n)), sp.zeros(n, 1))

    H = {(i, j): L * L * N[i, j] - L * Nvec(L * e[i], e[j]) - L * Nvec(e[i], L * e[j]) + Nvec(L * e[i], L * e[j]) for i in range(n) for j in range(n)}
    point = [0.31, 0.17, 0.44]
    subs = dict(zip(u, point))
    Ld = np.array(L.subs(subs), dtype=float)
    dL = np.array([[[float(sp.diff(L[k, i], u[a]).subs(subs)) for a in range(n)] for i in range(n)] for k in range(n)])
    Nd = nijenhuis_dense(Ld, dL)
    np.testing.assert_allclose(Nd, sym_components(N, n, point, u), atol=1e-13)
    Hd = haantjes_dense(Ld, Nd)
    expected = sym_components(H, n, point, u)
    assert np.max(np.abs(expected)) > 1e-2  # genuinely non-Haantjes
    np.testing.assert_allclose(Hd, expected, atol=1e-12)


def test_bracket_matches_definition():
    """<L, M>(d_i, d_j) = [L d_i, M d_j] - L[d_i, M d_j] - M[L d_i, d_j]."""
    gL = ["u1*u2", "u3 + 1", "u1^2 - u3"]
    gM = ["u2^2", "u1*u3", "2 + u2"]
    n = 3
    u = sym_coords(n)
    names = dict(zip(["u1", "u2", "u3"], u))
    L = sym_toeplitz([sp.sympify(x.replace("^", "**"), locals=names) for x in gL])
    M = sym_toeplitz([sp.sympify(x.replace("^", "**"), locals=names) for x in gM])
    e = [sp.Matrix([1 if a == i else 0 for a in range(n)]) for i in range(n)]
    T = {(i, j): lie(L * e[i], M * e[j], u) - L * lie(e[i], M * e[j], u) - M * lie(L * e[i], e[j], u) for i in range(n) for j in range(n)}
    point = [0.12, 0.37, 0.25]
    got = bracket(OperatorFieldSpec.direct(gL), OperatorFieldSpec.direct(gM), point).components
    np.testing.assert_allclose(got, sym_components(T, n, point, u), atol=1e-14)


def test_bracket_of_field_with_itself_is_torsion():
    L = OperatorFieldSpec.direct(["u1*u2", "u3 + 1", "u1^2 - u3"])
    u = rng.uniform(0, 0.5, size=(6, 3))
    np.testing.assert_allclose(bracket(L, L, u).components, nijenhuis_torsion(L, u).components, atol=1e-15)
    with pytest.raises(DimensionMismatch):
        bracket(L, OperatorFieldSpec.direct(["0", "1"]), u)


def test_leibniz_rule():
    L = OperatorFieldSpec.direct(["u1*u2", "u3 + 1", "u1^2 - u3"])
    M = generate_operator(3, ["p*q", "1 + q^2", "exp(x)"])
    res = leibniz_residual("sin(u1*u3) + u2^2", L, M, rng.uniform(0, 0.5, size=(8, 3)))
    assert np.max(res) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_jet_jacobian_matches_finite_differences(n):
    f = ["p*q + sin(p)"] * (n - 2) + ["1 + exp(q)*p", "cos(x) + x^2"]
    spec = generate_operator(n, f)
    u = rng.uniform(0, 0.5, size=(6, n))
    jet = jacobian_g(spec, u)
    fd = jacobian_g(spec, u, method="finite_difference")
    assert np.max(np.abs(jet - fd)) < 1e-8


def test_eval_field_shapes():
    spec = OperatorFieldSpec.direct(["u1", "u2", "1"])
    assert eval_field(spec, np.zeros(3)).g.shape == (3,)
    assert eval_field(spec, np.zeros((4, 2, 3))).g.shape == (4, 2, 3)
    with pytest.raises(DimensionMismatch):
        eval_field(spec, np.zeros(4))

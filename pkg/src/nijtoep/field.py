"""Operator fields in upper triangular Toeplitz form and their torsions.

A field is described by an :class:`OperatorFieldSpec`, either directly through
expressions ``g_1..g_n`` in the coordinates ``u1..un`` or through generating
functions ``f_1..f_{n-1}`` (of ``p, q``) and ``f_n`` (of ``x``), in which case

    L = f_1(P, Q) J^{n-1} + ... + f_{n-1}(P, Q) J + f_n(P).

Tensor components follow ``T[..., k, i, j] = T(d_i, d_j)^k``.  All torsions are
evaluated on coordinate vector fields, whose commutators vanish, so only the
matrix ``L`` and its partial derivatives ``dL[..., k, i, a] = d_a L^k_i`` enter.
Every function accepts a single point of shape ``(n,)`` or a batch ``(..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArityMismatch, DimensionMismatch
from .expressions import Expression, as_expression
from .series import TruncatedSeries
from .toeplitz import ToeplitzCoeffs, coeffs_from_series, dense_from_coeffs, function_of_series, pq_series

__all__ = [
    "coordinate_names",
    "OperatorFieldSpec",
    "Tensor12",
    "g_values",
    "eval_field",
    "jacobian_g",
    "local_data",
    "nijenhuis_torsion",
    "haantjes_torsion",
    "bracket",
    "structure_tensors",
    "leibniz_residual",
    "nijenhuis_dense",
    "haantjes_dense",
    "bracket_dense",
    "normalized_magnitude",
    "torsion_norm",
    "haantjes_norm",
]

FD_STEP = 1e-5
_JET_LEVEL = -1


def coordinate_names(n):
    return [f"u{i}" for i in range(1, n + 1)]


@dataclass(frozen=True)
class OperatorFieldSpec:
    """Dimension plus either direct coefficients or generating functions.

    Use :meth:`direct` or :meth:`generated` rather than the constructor.
    """

    n: int
    g: tuple = None
    f: tuple = None
    f_n: Expression = None

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatch("operator fields need n >= 2")
        if (self.g is None) == (self.f is None):
            raise ValueError("give either direct coefficients g or generating functions f")
        if self.g is not None and len(self.g) != self.n:
            raise DimensionMismatch(f"{len(self.g)} coefficients given for n={self.n}")
        if self.f is not None:
            if len(self.f) != self.n - 1:
                raise ArityMismatch(f"need {self.n - 1} functions of (p, q), got {len(self.f)}")
            for fi in self.f:
                if fi.arity != 2:
                    raise ArityMismatch(f"{fi} must be a function of (p, q)")
            if self.f_n is not None and self.f_n.arity != 1:
                raise ArityMismatch(f"{self.f_n} must be a function of x")

    @classmethod
    def direct(cls, g):
        g = list(g)
        names = coordinate_names(len(g))
        return cls(n=len(g), g=tuple(as_expression(gi, names) for gi in g))

    @classmethod
    def generated(cls, f, f_n=None):
        """``f``: the ``n-1`` functions of ``(p, q)``; ``f_n``: function of ``x`` or None.

        Without ``f_n`` the field has zero diagonal.
        """
        f = tuple(as_expression(fi, ("p", "q")) for fi in f)
        fn = None if f_n is None else as_expression(f_n, ("x",))
        return cls(n=len(f) + 1, f=f, f_n=fn)

    @property
    def mode(self):
        return "direct" if self.g is not None else "generated"

    @property
    def include_f_n(self):
        return self.f is not None and self.f_n is not None

    def describe(self):
        if self.mode == "direct":
            return {"mode": "direct", "n": self.n, "g": [str(e) for e in self.g]}
        return {
            "mode": "generated",
            "n": self.n,
            "f": [str(e) for e in self.f],
            "f_n": None if self.f_n is None else str(self.f_n),
        }


def g_values(spec, coords):
    """Coefficients ``g_1..g_n`` at coordinates given as ring elements."""
    n = spec.n
    if len(coords) != n:
        raise DimensionMismatch(f"point has {len(coords)} components, expected {n}")
    if spec.mode == "direct":
        binding = dict(zip(coordinate_names(n), coords))
        return [e.eval(binding) for e in spec.g]
    p, q = pq_series(coords)
    total = None
    for i, fi in enumerate(spec.f, start=1):
        term = function_of_series(fi, p, q).shift(n - i)
        total = term if total is None else total + term
    if spec.f_n is not None:
        total = total + function_of_series(spec.f_n, p)
    return coeffs_from_series(total)


def _as_points(u, n):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != n:
        raise DimensionMismatch(f"point has {u.shape[-1]} components, expected {n}")
    return u


def _stack(values, batch):
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), batch) for v in values], axis=-1)


def eval_field(spec: OperatorFieldSpec, u) -> ToeplitzCoeffs:
    u = _as_points(u, spec.n)
    coords = [u[..., k] for k in range(spec.n)]
    return ToeplitzCoeffs(_stack(g_values(spec, coords), u.shape[:-1]))


def _jet_parts(x):
    if isinstance(x, TruncatedSeries) and x.level == _JET_LEVEL:
        return x.coeffs[0], x.coeffs[1]
    return x, 0.0


def _jets(gfun, n, u):
    """Values ``(..., n)`` and Jacobian ``(..., n, n)`` of ``gfun`` via order-2 jets."""
    batch = u.shape[:-1]
    base = [u[..., k] for k in range(n)]
    cols = []
    values = None
    for j in range(n):
        coords = list(base)
        coords[j] = TruncatedSeries.variable(u[..., j], 2, level=_JET_LEVEL)
        parts = [_jet_parts(x) for x in gfun(coords)]
        if values is None:
            values = _stack([p[0] for p in parts], batch)
        cols.append(_stack([p[1] for p in parts], batch))
    return values, np.stack(cols, axis=-1)


def _finite_difference(gfun, n, u, h):
    batch = u.shape[:-1]
    cols = []
    for j in range(n):
        up = u.copy()
        um = u.copy()
        up[..., j] += h
        um[..., j] -= h
        gp = _stack(gfun([up[..., k] for k in range(n)]), batch)
        gm = _stack(gfun([um[..., k] for k in range(n)]), batch)
        cols.append((gp - gm) / (2 * h))
    return np.stack(cols, axis=-1)


def jacobian_g(spec: OperatorFieldSpec, u, method="jet", h=FD_STEP):
    """``G[..., i, j] = d g_i / d u^j`` by jets or central differences."""
    u = _as_points(u, spec.n)
    gfun = lambda coords: g_values(spec, coords)  # noqa: E731
    if method == "jet":
        return _jets(gfun, spec.n, u)[1]
    if method == "finite_difference":
        return _finite_difference(gfun, spec.n, u, h)
    raise ValueError(f"unknown differentiation method {method!r}")


def _dense_derivative(G):
    """``dL[..., k, i, a] = d_a L^k_i`` from the Jacobian of the coefficients."""
    n = G.shape[-1]
    out = np.zeros(G.shape[:-2] + (n, n, n))
    for k in range(n):
        for i in range(k, n):
            out[..., k, i, :] = G[..., n - 1 - (i - k), :]
    return out


@dataclass(frozen=True)
class LocalData:
    """Everything pointwise torsion formulas need at a batch of points."""

    g: np.ndarray
    G: np.ndarray

    @property
    def L(self):
        return dense_from_coeffs(self.g)

    @property
    def dL(self):
        return _dense_derivative(self.G)


def local_data(spec, u, method="jet"):
    u = _as_points(u, spec.n)
    if method == "jet":
        g, G = _jets(lambda c: g_values(spec, c), spec.n, u)
    else:
        g = eval_field(spec, u).g
        G = jacobian_g(spec, u, method=method)
    return LocalData(g, G)


@dataclass(frozen=True)
class Tensor12:
    """A ``(1, 2)`` tensor: ``components[..., k, i, j] = T(d_i, d_j)^k``."""

    components: np.ndarray

    @property
    def n(self):
        return self.components.shape[-1]

    def max_abs(self):
        return np.max(np.abs(self.components), axis=(-3, -2, -1))

    def __call__(self, xi, eta):
        return np.einsum("...kij,...i,...j->...k", self.components, xi, eta)

    def __sub__(self, other):
        return Tensor12(self.components - other.components)

    def __add__(self, other):
        return Tensor12(self.components + other.components)


# dense kernels -------------------------------------------------------------------


def bracket_dense(L, dL, M, dM):
    """``<L, M>`` on coordinate fields for commuting ``L`` and ``M``."""
    return (
        np.einsum("...ai,...kja->...kij", L, dM)
        - np.einsum("...aj,...kia->...kij", M, dL)
        - np.einsum("...ka,...aji->...kij", L, dM)
        + np.einsum("...ka,...aij->...kij", M, dL)
    )


def nijenhuis_dense(L, dL):
    return bracket_dense(L, dL, L, dL)


def haantjes_dense(L, N):
    L2 = L @ L
    return (
        np.einsum("...ka,...aij->...kij", L2, N)
        + np.einsum("...kab,...ai,...bj->...kij", N, L, L)
        - np.einsum("...kc,...caj,...ai->...kij", L, N, L)
        - np.einsum("...kc,...cib,...bj->...kij", L, N, L)
    )


def normalized_magnitude(T, L, dL):
    """max|T| / (1 + max|L| + max|dL|), per point."""
    scale = 1.0 + np.max(np.abs(L), axis=(-2, -1)) + np.max(np.abs(dL), axis=(-3, -2, -1))
    return np.max(np.abs(T), axis=(-3, -2, -1)) / scale


# public Toeplitz-field operations ------------------------------------------------


def nijenhuis_torsion(spec, u, method="jet") -> Tensor12:
    d = local_data(spec, u, method)
    return Tensor12(nijenhuis_dense(d.L, d.dL))


def haantjes_torsion(spec, u, method="jet") -> Tensor12:
    d = local_data(spec, u, method)
    L = d.L
    return Tensor12(haantjes_dense(L, nijenhuis_dense(L, d.dL)))


def torsion_norm(spec, u, method="jet"):
    d = local_data(spec, u, method)
    L, dL = d.L, d.dL
    return normalized_magnitude(nijenhuis_dense(L, dL), L, dL)


def haantjes_norm(spec, u, method="jet"):
    d = local_data(spec, u, method)
    L, dL = d.L, d.dL
    return normalized_magnitude(haantjes_dense(L, nijenhuis_dense(L, dL)), L, dL)


def bracket(specL, specM, u) -> Tensor12:
    if specL.n != specM.n:
        raise DimensionMismatch(f"dimensions differ: {specL.n} vs {specM.n}")
    a = local_data(specL, u)
    b = local_data(specM, u)
    return Tensor12(bracket_dense(a.L, a.dL, b.L, b.dL))


def _powers_of_j(n):
    J = np.eye(n, k=1)
    out = [np.eye(n)]
    for _ in range(n - 1):
        out.append(out[-1] @ J)
    return out  # out[m] = J^m


def structure_tensors(spec, u):
    """The symmetric tensor ``T_L`` and the skew tensor ``M_L`` built from ``dg``."""
    G = local_data(spec, u).G
    return _structure_from_jacobian(G)


def _structure_from_jacobian(G):
    n = G.shape[-1]
    Jp = _powers_of_j(n)
    J = Jp[1]
    # (alpha (x) A)[k,a,b] = alpha[a] A[k,b];  (A (x) alpha)[k,a,b] = A[k,a] alpha[b]
    left = lambda alpha, A: np.einsum("...a,kb->...kab", alpha, A)  # noqa: E731
    right = lambda A, alpha: np.einsum("ka,...b->...kab", A, alpha)  # noqa: E731
    pull = lambda alpha: alpha @ J  # noqa: E731  (J^* alpha)_j = sum_i alpha_i J_ij
    dg = [G[..., i, :] for i in range(n)]  # dg[i-1] = d g_i
    T = sum(left(dg[i - 1], Jp[n - i]) + right(Jp[n - i], dg[i - 1]) for i in range(1, n + 1))
    M = sum(left(pull(dg[i - 1]), Jp[n - i]) - right(Jp[n - i], pull(dg[i - 1])) for i in range(1, n + 1))
    M = M + sum(right(Jp[n - i], dg[i]) - left(dg[i], Jp[n - i]) for i in range(1, n))
    return Tensor12(T), Tensor12(M)


def leibniz_residual(f, specL, specM, u):
    """Max-abs defect of both product rules for ``<fL, M>`` and ``<L, fM>``.

    ``<fL, M> = f<L, M> + ML (x) df - L (x) M^* df`` and
    ``<L, fM> = f<L, M> + L^* df (x) M - df (x) ML``, with
    ``(A (x) alpha)(xi, eta) = alpha(eta) A xi`` and
    ``(alpha (x) A)(xi, eta) = alpha(xi) A eta``.
    Returns an array with one value per point.
    """
    n = specL.n
    names = coordinate_names(n)
    f = as_expression(f, names)
    u = _as_points(u, n)
    fval = lambda c: f.eval(dict(zip(names, c)))  # noqa: E731
    fL = _jets(lambda c: [fval(c) * x for x in g_values(specL, c)], n, u)
    fM = _jets(lambda c: [fval(c) * x for x in g_values(specM, c)], n, u)
    fv, df = _jets(lambda c: [fval(c)], n, u)
    fv, df = fv[..., 0], df[..., 0, :]
    a = local_data(specL, u)
    b = local_data(specM, u)
    L, dL, M, dM = a.L, a.dL, b.L, b.dL
    base = bracket_dense(L, dL, M, dM)
    ML = M @ L
    Mdf = np.einsum("...a,...aj->...j", df, M)
    Ldf = np.einsum("...a,...aj->...j", df, L)
    first = (
        bracket_dense(dense_from_coeffs(fL[0]), _dense_derivative(fL[1]), M, dM)
        - fv[..., None, None, None] * base
        - np.einsum("...ki,...j->...kij", ML, df)
        + np.einsum("...ki,...j->...kij", L, Mdf)
    )
    second = (
        bracket_dense(L, dL, dense_from_coeffs(fM[0]), _dense_derivative(fM[1]))
        - fv[..., None, None, None] * base
        - np.einsum("...i,...kj->...kij", Ldf, M)
        + np.einsum("...i,...kj->...kij", df, ML)
    )
    return np.maximum(np.max(np.abs(first), axis=(-3, -2, -1)), np.max(np.abs(second), axis=(-3, -2, -1)))

"""Upper triangular Toeplitz matrices stored as coefficient vectors.

The matrix ``g_1 J^{n-1} + ... + g_{n-1} J + g_n Id`` is stored as the vector
``(g_1, ..., g_n)``: ``g_n`` sits on the diagonal and ``g_1`` in the top-right
corner.  Such a matrix corresponds to the truncated polynomial
``g_n + g_{n-1} t + ... + g_1 t^{n-1}``, with ``J`` playing the role of ``t``,
so products are truncated convolutions and matrix functions come from
truncated Taylor expansion.

Arrays carry any leading batch dimensions first: ``g`` has shape ``(..., n)``
and :meth:`ToeplitzCoeffs.dense` has shape ``(..., n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArityMismatch, DimensionMismatch
from .expressions import Expression
from .series import TruncatedSeries

__all__ = [
    "REGULARITY_THRESHOLD",
    "ToeplitzCoeffs",
    "GlRegularity",
    "jordan",
    "identity",
    "toeplitz_mul",
    "build_PQ",
    "matrix_function",
    "gl_regularity",
    "dense_from_coeffs",
    "pq_series",
    "series_from_coeffs",
    "coeffs_from_series",
]

REGULARITY_THRESHOLD = 1e-6


def dense_from_coeffs(g):
    """Dense ``(..., n, n)`` matrix of Toeplitz coefficients ``g`` of shape ``(..., n)``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    i, j = np.indices((n, n))
    band = j - i
    out = np.zeros(g.shape[:-1] + (n, n))
    upper = band >= 0
    out[..., upper] = g[..., n - 1 - band[upper]]
    return out


@dataclass(frozen=True)
class ToeplitzCoeffs:
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim == 0 or g.shape[-1] < 1:
            raise DimensionMismatch("Toeplitz coefficients need a trailing dimension n >= 1")
        object.__setattr__(self, "g", g)

    @property
    def n(self):
        return self.g.shape[-1]

    def __getitem__(self, i):
        """``g_i`` with the 1-based index used for the coefficients."""
        if not 1 <= i <= self.n:
            raise IndexError(i)
        return self.g[..., i - 1]

    def dense(self):
        return dense_from_coeffs(self.g)

    @classmethod
    def from_dense(cls, A):
        """Read coefficients off the first row of an (assumed Toeplitz) matrix."""
        A = np.asarray(A, dtype=float)
        return cls(A[..., 0, ::-1])

    def __matmul__(self, other):
        return toeplitz_mul(self, other)

    def __add__(self, other):
        _same_n(self, other)
        return ToeplitzCoeffs(self.g + other.g)


def _same_n(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"dimensions differ: {a.n} vs {b.n}")


def jordan(n):
    """The nilpotent Jordan block ``J`` (ones on the superdiagonal)."""
    g = np.zeros(n)
    if n >= 2:
        g[n - 2] = 1.0
    return ToeplitzCoeffs(g)


def identity(n):
    g = np.zeros(n)
    g[n - 1] = 1.0
    return ToeplitzCoeffs(g)


def series_from_coeffs(g, level=0):
    """The polynomial ``g_n + g_{n-1} t + ... + g_1 t^{n-1}`` of a coefficient list."""
    g = list(g)
    return TruncatedSeries._raw(g[::-1], level)


def coeffs_from_series(s):
    return list(s.coeffs[::-1])


def _array_series(coeffs):
    g = coeffs.g
    return series_from_coeffs([g[..., i] for i in range(coeffs.n)])


def _stack(values, batch_shape):
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), batch_shape) for v in values], axis=-1)


def toeplitz_mul(a, b):
    _same_n(a, b)
    prod = _array_series(a) * _array_series(b)
    return ToeplitzCoeffs(_stack(coeffs_from_series(prod), np.broadcast_shapes(a.g.shape[:-1], b.g.shape[:-1])))


def pq_series(coords, level=0):
    """Series ``p(t), q(t)`` of the fields ``P`` and ``Q`` at coordinates ``u^1..u^n``.

    ``p(t) = u^n + u^{n-1} t + ... + u^1 t^{n-1}`` and ``q = dp/dt``.
    Coordinates may be arbitrary ring elements.
    """
    n = len(coords)
    p = [coords[n - 1 - k] for k in range(n)]
    q = [p[k + 1] * float(k + 1) for k in range(n - 1)] + [0.0]
    return TruncatedSeries._raw(p, level), TruncatedSeries._raw(q, level)


def build_PQ(n, u):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != n:
        raise DimensionMismatch(f"point has {u.shape[-1]} components, expected {n}")
    q = np.zeros_like(u)
    for i in range(2, n + 1):
        q[..., i - 1] = (n - i + 1) * u[..., i - 2]
    return ToeplitzCoeffs(u.copy()), ToeplitzCoeffs(q)


def as_series(x, order, level=0):
    if isinstance(x, TruncatedSeries) and x.level == level:
        return x
    return TruncatedSeries.constant(x, order, level)


def function_of_series(f, p, q=None):
    """Evaluate ``f(p(t))`` or ``f(p(t), q(t))`` in the truncated series ring."""
    if q is None:
        if f.arity != 1:
            raise ArityMismatch(f"expected a function of one variable, got {f.variables}")
        out = f(p)
    else:
        if f.arity != 2:
            raise ArityMismatch(f"expected a function of two variables, got {f.variables}")
        out = f(p, q)
    return as_series(out, p.order, p.level)


def matrix_function(f: Expression, P: ToeplitzCoeffs, Q: ToeplitzCoeffs = None) -> ToeplitzCoeffs:
    """``f(P)`` or ``f(P, Q)`` for commuting upper triangular Toeplitz matrices."""
    p = _array_series(P)
    q = None
    if Q is not None:
        _same_n(P, Q)
        q = _array_series(Q)
    elif f.arity != 1:
        raise ArityMismatch(f"{f} takes {f.arity} arguments but only P was given")
    out = function_of_series(f, p, q)
    batch = P.g.shape[:-1] if Q is None else np.broadcast_shapes(P.g.shape[:-1], Q.g.shape[:-1])
    return ToeplitzCoeffs(_stack(coeffs_from_series(out), batch))


@dataclass(frozen=True)
class GlRegularity:
    regular: bool
    witness: float


def gl_regularity(coeffs: ToeplitzCoeffs, threshold=REGULARITY_THRESHOLD) -> GlRegularity:
    """Single-Jordan-block test: ``|g_{n-1}|`` above ``threshold``.

    For batched coefficients the witness is the smallest ``|g_{n-1}|``.
    """
    if coeffs.n < 2:
        raise DimensionMismatch("gl-regularity needs n >= 2")
    w = np.abs(coeffs.g[..., coeffs.n - 2])
    witness = float(np.min(w))
    return GlRegularity(regular=bool(witness > threshold), witness=witness)

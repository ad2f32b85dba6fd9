"""Tensor-product Chebyshev grids on the box ``[0, delta]^n``.

Each axis carries ``degree`` Chebyshev-Gauss-Lobatto points mapped onto
``[0, delta]`` in increasing order, so the first node of every axis is the
coordinate origin.  Differentiation and cumulative integration act on one axis
at a time through dense ``degree x degree`` matrices.

Axes are numbered like the coordinates: ``axis=k`` means ``u^k``, ``1 <= k <= n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import DimensionMismatch, GridEvaluationError, NijtoepError
from .expressions import Expression, as_expression
from .field import coordinate_names

__all__ = [
    "Grid",
    "GridFunction",
    "cheb_nodes",
    "differentiation_matrix",
    "integration_matrix",
    "grid_sample",
    "sample_along",
    "partial_derivative",
    "cumulative_integral",
    "restrict_axes_zero",
    "primitive_of_closed_form",
]

MIN_DEGREE = 4


def cheb_nodes(degree, delta):
    """Chebyshev-Gauss-Lobatto points on ``[0, delta]``, increasing."""
    N = degree - 1
    x = np.cos(np.pi * np.arange(degree) / N)
    nodes = 0.5 * delta * (1.0 - x)
    nodes[0], nodes[-1] = 0.0, delta
    return nodes


@lru_cache(maxsize=None)
def differentiation_matrix(degree, delta):
    """Spectral first-derivative matrix on the mapped nodes."""
    N = degree - 1
    j = np.arange(degree)
    x = np.cos(np.pi * j / N)
    c = np.ones(degree)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(degree))
    D = D - np.diag(D.sum(axis=1))
    # u = delta (1 - x) / 2
    D = -(2.0 / delta) * D
    D.setflags(write=False)
    return D


@lru_cache(maxsize=None)
def integration_matrix(degree, delta):
    """Spectral antiderivative vanishing at the first node (``u = 0``)."""
    s = 2.0 * cheb_nodes(degree, delta) / delta - 1.0
    V = C.chebvander(s, degree - 1)
    to_coeffs = np.linalg.inv(V)
    integ = np.zeros((degree + 1, degree))
    for m in range(degree):
        e = np.zeros(degree)
        e[m] = 1.0
        integ[:, m] = C.chebint(e, lbnd=-1.0) * (0.5 * delta)
    W = C.chebvander(s, degree) @ integ @ to_coeffs
    W[0, :] = 0.0
    W.setflags(write=False)
    return W


@dataclass(frozen=True)
class Grid:
    n: int
    degree: int = 16
    delta: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch("grid dimension must be positive")
        if self.degree < MIN_DEGREE:
            raise ValueError(f"need at least {MIN_DEGREE} nodes per axis")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def shape(self):
        return (self.degree,) * self.n

    @cached_property
    def nodes(self):
        return cheb_nodes(self.degree, self.delta)

    @property
    def D(self):
        return differentiation_matrix(self.degree, self.delta)

    @property
    def W(self):
        return integration_matrix(self.degree, self.delta)

    @cached_property
    def points(self):
        """Node coordinates, shape ``(degree,)*n + (n,)``."""
        mesh = np.meshgrid(*([self.nodes] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def coordinate(self, k):
        return GridFunction(self, self.points[..., k - 1].copy())

    def interior(self, margin=2):
        """Index selecting nodes at least ``margin`` nodes away from every face."""
        return (slice(margin, self.degree - margin),) * self.n

    def node(self, index):
        return self.points[tuple(index)]

    def check_axis(self, k):
        if not 1 <= k <= self.n:
            raise DimensionMismatch(f"axis {k} outside 1..{self.n}")
        return k - 1


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a scalar field at every node of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            values = np.broadcast_to(values, self.grid.shape).copy()
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", values)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise DimensionMismatch("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def max_abs(self, index=None):
        vals = self.values if index is None else self.values[index]
        return float(np.max(np.abs(vals)))

    @property
    def flat(self):
        return self.values.reshape(-1)


def _evaluate(f, coords):
    if isinstance(f, Expression):
        return f.eval(dict(zip(coordinate_names(len(coords)), coords)))
    return f(*coords)


def grid_sample(f, grid: Grid) -> GridFunction:
    """Sample ``f`` (an expression in ``u1..un``, DSL text, or a callable) at all nodes."""
    if not callable(f) or isinstance(f, str):
        f = as_expression(f, coordinate_names(grid.n))
    pts = grid.points
    coords = [pts[..., k] for k in range(grid.n)]
    try:
        vals = _evaluate(f, coords)
    except NijtoepError as exc:
        flat = pts.reshape(-1, grid.n)
        for node in flat:
            try:
                _evaluate(f, list(node))
            except NijtoepError as inner:
                raise GridEvaluationError(str(inner), node) from inner
        raise exc
    return GridFunction(grid, np.broadcast_to(np.asarray(vals, dtype=float), grid.shape))


def sample_along(f, grid: Grid, axis) -> GridFunction:
    """Sample a function of one variable ``x`` at ``x = u^axis``."""
    grid.check_axis(axis)
    f = as_expression(f, ("x",))
    names = coordinate_names(grid.n)
    return grid_sample(f.renamed({"x": names[axis - 1]}, names), grid)


def _along(M, values, ax):
    return np.moveaxis(np.tensordot(M, values, axes=([1], [ax])), 0, ax)


def partial_derivative(g: GridFunction, axis) -> GridFunction:
    ax = g.grid.check_axis(axis)
    return GridFunction(g.grid, _along(g.grid.D, g.values, ax))


def cumulative_integral(g: GridFunction, axis) -> GridFunction:
    """Antiderivative along ``u^axis`` that vanishes where ``u^axis = 0``."""
    ax = g.grid.check_axis(axis)
    return GridFunction(g.grid, _along(g.grid.W, g.values, ax))


def restrict_axes_zero(g: GridFunction, axes) -> GridFunction:
    """Pin the listed coordinates to 0 and broadcast back over the grid."""
    vals = g.values
    for k in sorted(set(axes)):
        ax = g.grid.check_axis(k)
        vals = np.take(vals, [0], axis=ax)
    return GridFunction(g.grid, np.broadcast_to(vals, g.grid.shape))


def primitive_of_closed_form(omega, r=None) -> GridFunction:
    """Function ``v`` with ``dv/du^k = omega_k`` for ``k <= n-1`` (``omega`` closed).

    ``v = sum_k int_0^{u^k} omega_k(0, .., 0, t, u^{k+1}, .., u^n) dt + r(u^n)``;
    ``r`` is a function of ``x`` (evaluated at ``u^n``), a grid function, or None.
    """
    omega = list(omega)
    if not omega:
        raise ValueError("need at least one component")
    grid = omega[0].grid
    if len(omega) != grid.n - 1:
        raise DimensionMismatch(f"closed form needs {grid.n - 1} components, got {len(omega)}")
    total = np.zeros(grid.shape)
    for k, w in enumerate(omega, start=1):
        pinned = restrict_axes_zero(w, range(1, k))
        total = total + cumulative_integral(pinned, k).values
    v = GridFunction(grid, total)
    if r is None:
        return v
    if isinstance(r, GridFunction):
        return v + r
    return v + sample_along(r, grid, grid.n)

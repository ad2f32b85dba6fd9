"""Coordinate changes that bring a zero-diagonal Toeplitz Nijenhuis operator ``M`` to ``J``.

The functions ``v^1..v^n`` solve ``M^* dv^i = dv^{i+1}`` for ``i = 1..n-1``.
They are built from the top down on a Chebyshev grid:

* ``v^n = int_0^{u^n} q``;
* given ``v^{k+1}``, solve the triangular system ``M^* omega = dv^{k+1}`` for
  ``omega = omega_1 du^1 + ... + omega_{n-1} du^{n-1}``, then integrate the
  (closed) form ``omega`` from the origin and add an arbitrary ``r_k(u^n)``.

Derivatives of the stored ``v`` are spectral; nothing is done symbolically.
The Jacobian ``V = dv/du`` then satisfies ``V M V^{-1} = J``, and any Toeplitz
field conjugated by ``V`` stays Toeplitz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import Grid, GridFunction, cumulative_integral, partial_derivative, primitive_of_closed_form, sample_along
from .errors import (
    ClosednessViolation,
    DimensionMismatch,
    InconsistentSystem,
    PreconditionViolation,
    RegularityViolation,
    SingularJacobian,
)
from .expressions import as_expression
from .field import OperatorFieldSpec, eval_field, jacobian_g
from .series import TruncatedSeries
from .toeplitz import ToeplitzCoeffs

__all__ = [
    "REGULARITY_BOUND",
    "SYS_TOLERANCE",
    "CLOSEDNESS_TOLERANCE",
    "CONSISTENCY_TOLERANCE",
    "PUSHFORWARD_MARGIN",
    "SysReport",
    "LevelDiagnostics",
    "TransformResult",
    "PushforwardReport",
    "solve_omega",
    "run_algorithm",
    "verify_sys",
    "jacobian_matrix",
    "pushforward_check",
    "j_preserving_spec",
    "j_preserving_map",
    "j_preserving_diagnostics",
    "compose_j_preserving",
]

REGULARITY_BOUND = 1e-4
SYS_TOLERANCE = 1e-8
CLOSEDNESS_TOLERANCE = 1e-7
KRP_TOLERANCE = 1e-8
CONSISTENCY_TOLERANCE = 1e-7
PUSHFORWARD_MARGIN = 2
SYS_MARGIN = 2


def _values(x):
    return x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)


def _first_bad(mask, grid):
    idx = np.argwhere(mask)[0]
    return grid.node(idx) if grid is not None else tuple(float(i) for i in idx)


def solve_omega(M_values: ToeplitzCoeffs, dv, regularity_bound=REGULARITY_BOUND, consistency_tol=CONSISTENCY_TOLERANCE):
    """Solve ``M^* omega = dv`` node by node for ``omega_1..omega_{n-1}``.

    ``(M^* omega)_j = sum_{i<j} omega_i M_ij``: the equation for ``j`` fixes
    ``omega_{j-1}``, so a forward sweep over ``j = 2..n`` suffices.  The
    ``j = 1`` component of ``dv`` must vanish.
    """
    dv = list(dv)
    grid = dv[0].grid if isinstance(dv[0], GridFunction) else None
    m = M_values.g
    n = M_values.n
    if len(dv) != n:
        raise DimensionMismatch(f"dv has {len(dv)} components, expected {n}")
    d = [_values(x) for x in dv]
    lead = m[..., n - 2]
    small = np.abs(lead) < regularity_bound
    if np.any(small):
        raise RegularityViolation(
            f"|m_(n-1)| = {np.min(np.abs(lead)):.3e} below {regularity_bound:g}", _first_bad(small, grid)
        )
    scale = 1.0 + max(float(np.max(np.abs(x))) for x in d)
    if np.max(np.abs(d[0])) > consistency_tol * scale:
        raise InconsistentSystem(f"first component of dv is {np.max(np.abs(d[0])):.3e}, expected 0")
    omega = []
    for j in range(2, n + 1):
        acc = d[j - 1].copy()
        for i in range(1, j - 1):
            acc -= omega[i - 1] * m[..., n - 1 - (j - i)]
        omega.append(acc / lead)
    if grid is not None:
        return [GridFunction(grid, w) for w in omega]
    return omega


def _pullback(M, alpha):
    # alpha: (..., n) covector, M: (..., n, n)
    return np.einsum("...a,...aj->...j", alpha, M)


def jacobian_matrix(v):
    """``V[..., i, j] = d v^i / d u^j`` by spectral differentiation."""
    grid = v[0].grid
    return np.stack(
        [np.stack([partial_derivative(vi, k).values for k in range(1, grid.n + 1)], axis=-1) for vi in v], axis=-2
    )


@dataclass
class SysReport:
    residuals: list
    min_abs_dv1_du1: float
    tolerance: float
    passed: bool

    def as_dict(self):
        return {
            "residuals": [float(r) for r in self.residuals],
            "max_residual": float(max(self.residuals)) if self.residuals else 0.0,
            "min_abs_dv1_du1": self.min_abs_dv1_du1,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def verify_sys(v, M_spec: OperatorFieldSpec, grid: Grid, tolerance=SYS_TOLERANCE, margin=SYS_MARGIN) -> SysReport:
    """Max-abs residual of ``M^* dv^i - dv^{i+1}`` over interior nodes, for each ``i``."""
    v = list(v)
    n = grid.n
    if len(v) != n:
        raise DimensionMismatch(f"need {n} functions, got {len(v)}")
    inner = grid.interior(margin)
    M = eval_field(M_spec, grid.points[inner]).dense()
    V = jacobian_matrix(v)[inner]
    res = [float(np.max(np.abs(_pullback(M, V[..., i, :]) - V[..., i + 1, :]))) for i in range(n - 1)]
    min_d = float(np.min(np.abs(V[..., 0, 0])))
    return SysReport(res, min_d, tolerance, bool(max(res, default=0.0) <= tolerance and min_d > 0.0))


@dataclass
class LevelDiagnostics:
    """Checks made while building ``v^index`` from ``omega``."""

    index: int
    consistency: float
    symmetric_derivatives: float
    form_on_image: float


@dataclass
class TransformResult:
    v: list
    omega_trace: list
    levels: list
    sys: SysReport
    triangularity: float
    diagonal_ratio_error: float
    min_abs_m: float
    grid: Grid = field(repr=False)

    def as_dict(self):
        return {
            "sys": self.sys.as_dict(),
            "levels": [
                {
                    "v_index": lv.index,
                    "consistency": lv.consistency,
                    "symmetric_derivatives": lv.symmetric_derivatives,
                    "form_on_image": lv.form_on_image,
                }
                for lv in self.levels
            ],
            "triangularity": self.triangularity,
            "diagonal_ratio_error": self.diagonal_ratio_error,
            "min_abs_m": self.min_abs_m,
        }


def _closedness(omega, M_dense, inner):
    """Symmetry of ``d omega_i / d u^j`` (i, j < n) and ``d omega(M., M.)``."""
    grid = omega[0].grid
    n = grid.n
    comps = list(omega) + [GridFunction(grid, 0.0)]
    dW = np.stack(
        [np.stack([partial_derivative(w, a).values for w in comps], axis=-1) for a in range(1, n + 1)], axis=-2
    )  # dW[..., a, b] = d omega_b / d u^a
    curl = dW - np.swapaxes(dW, -1, -2)
    sym = float(np.max(np.abs(curl[inner][..., : n - 1, : n - 1]))) if n > 2 else 0.0
    Mi = M_dense[inner]
    image = np.einsum("...ai,...ab,...bj->...ij", Mi, curl[inner], Mi)
    return sym, float(np.max(np.abs(image)))


def run_algorithm(
    M_spec: OperatorFieldSpec,
    q,
    r,
    grid: Grid,
    regularity_bound=REGULARITY_BOUND,
    closedness_tol=CLOSEDNESS_TOLERANCE,
    consistency_tol=CONSISTENCY_TOLERANCE,
    sys_tolerance=SYS_TOLERANCE,
    margin=PUSHFORWARD_MARGIN,
) -> TransformResult:
    """Build ``v^1..v^n`` with ``M^* dv^i = dv^{i+1}`` on ``grid``.

    ``q`` and the entries of ``r`` are functions of ``x`` evaluated at ``u^n``;
    ``r[k-1]`` is the integration constant added to ``v^k`` (None means 0).
    """
    n = M_spec.n
    if grid.n != n:
        raise DimensionMismatch(f"grid has dimension {grid.n}, operator has {n}")
    r = list(r) if r is not None else [None] * (n - 1)
    if len(r) != n - 1:
        raise DimensionMismatch(f"need {n - 1} integration constants, got {len(r)}")
    r = [None if ri is None else as_expression(ri, ("x",)) for ri in r]

    M_vals = eval_field(M_spec, grid.points)
    M_dense = M_vals.dense()
    diag = M_vals.g[..., n - 1]
    if np.max(np.abs(diag)) > 1e-12 * (1.0 + np.max(np.abs(M_vals.g))):
        raise PreconditionViolation("M must have zero diagonal (generate it without f_n)")
    lead = M_vals.g[..., n - 2]
    small = np.abs(lead) < regularity_bound
    if np.any(small):
        raise RegularityViolation(
            f"|m_(n-1)| = {np.min(np.abs(lead)):.3e} below {regularity_bound:g}", _first_bad(small, grid)
        )

    q_grid = sample_along(q, grid, n)
    if np.min(np.abs(q_grid.values)) <= 1e-12:
        raise PreconditionViolation("q must not vanish on [0, delta]")

    inner = grid.interior(margin)
    v = [None] * n
    v[n - 1] = cumulative_integral(q_grid, n)
    omega_trace = []
    levels = []
    for k in range(n - 1, 0, -1):
        dv = [partial_derivative(v[k], a) for a in range(1, n + 1)]
        scale = 1.0 + max(x.max_abs() for x in dv)
        consistency = dv[0].max_abs() / scale
        omega = solve_omega(M_vals, dv, regularity_bound, consistency_tol)
        sym, image = _closedness(omega, M_dense, inner)
        wscale = 1.0 + max(w.max_abs() for w in omega)
        sym, image = sym / wscale, image / wscale
        if sym > closedness_tol or image > KRP_TOLERANCE * max(1.0, np.max(np.abs(M_dense)) ** 2):
            raise ClosednessViolation(
                f"omega for v^{k} is not closed: derivative asymmetry {sym:.3e}, d omega(M., M.) {image:.3e}"
            )
        omega_trace.append(omega)
        levels.append(LevelDiagnostics(k, consistency, sym, image))
        v[k - 1] = primitive_of_closed_form(omega, r[k - 1])

    report = verify_sys(v, M_spec, grid, sys_tolerance, margin)
    V = jacobian_matrix(v)[inner]
    lower = np.tril_indices(n, -1)
    triangularity = float(np.max(np.abs(V[..., lower[0], lower[1]]))) if n > 1 else 0.0
    m_in = lead[inner]
    ratios = [np.abs(V[..., i + 1, i + 1] / V[..., i, i] - m_in) for i in range(n - 1)]
    ratio_err = float(max(np.max(x) for x in ratios))
    return TransformResult(
        v=v,
        omega_trace=omega_trace,
        levels=levels,
        sys=report,
        triangularity=triangularity,
        diagonal_ratio_error=ratio_err,
        min_abs_m=float(np.min(np.abs(lead))),
        grid=grid,
    )


@dataclass
class PushforwardReport:
    toeplitz_deviation: float
    j_deviation: float
    tolerance: float
    is_toeplitz_after: bool
    equals_j_after: bool

    def as_dict(self):
        return {
            "toeplitz_deviation": self.toeplitz_deviation,
            "j_deviation": self.j_deviation,
            "tolerance": self.tolerance,
            "is_toeplitz_after": self.is_toeplitz_after,
            "equals_J_after": self.equals_j_after,
        }


def _toeplitz_deviation(A):
    n = A.shape[-1]
    worst = 0.0
    lower = np.tril_indices(n, -1)
    if n > 1:
        worst = float(np.max(np.abs(A[..., lower[0], lower[1]])))
    for b in range(n):
        band = np.diagonal(A, offset=b, axis1=-2, axis2=-1)
        worst = max(worst, float(np.max(np.abs(band - band[..., :1]))))
    return worst


def pushforward_check(
    v, L_spec: OperatorFieldSpec, grid: Grid, tolerance=1e-6, margin=PUSHFORWARD_MARGIN, cond_limit=1e12
) -> PushforwardReport:
    """Conjugate ``L`` by ``V = dv/du`` at interior nodes and measure the result.

    ``toeplitz_deviation`` is the worst sub-diagonal entry or spread along a
    diagonal band; ``j_deviation`` is ``max|V L V^{-1} - J|``.
    """
    n = grid.n
    inner = grid.interior(margin)
    V = jacobian_matrix(list(v))[inner]
    cond = np.linalg.cond(V)
    bad = ~(cond < cond_limit)
    if np.any(bad):
        idx = np.argwhere(bad)[0] + margin
        raise SingularJacobian("Jacobian of the coordinate change is singular", grid.node(idx))
    L = eval_field(L_spec, grid.points[inner]).dense()
    # A = V L V^{-1}  <=>  A^T = V^{-T} (V L)^T
    A = np.swapaxes(np.linalg.solve(np.swapaxes(V, -1, -2), np.swapaxes(V @ L, -1, -2)), -1, -2)
    tdev = _toeplitz_deviation(A)
    jdev = float(np.max(np.abs(A - np.eye(n, k=1))))
    return PushforwardReport(tdev, jdev, tolerance, tdev <= tolerance, jdev <= tolerance)


# maps preserving J -------------------------------------------------------------


def j_preserving_spec(h) -> OperatorFieldSpec:
    """Field ``h_1(P) J^{n-1} + ... + h_n(P)``: its coefficients ``w`` preserve ``J``."""
    h = [as_expression(hi, ("x",)) for hi in h]
    if len(h) < 2:
        raise DimensionMismatch("need n >= 2 functions")
    two = [hi.renamed({"x": "p"}, ("p", "q")) for hi in h[:-1]]
    return OperatorFieldSpec.generated(two, h[-1])


def _derivative(e, x):
    out = e(TruncatedSeries.variable(np.asarray(x, dtype=float), 2))
    return np.asarray(out.coeffs[1] if isinstance(out, TruncatedSeries) else 0.0, dtype=float)


def j_preserving_diagnostics(h, points):
    """Which derivative condition makes ``w`` a coordinate change at ``points``.

    Reports ``h_1'(0)``, ``h_n'(0)``, the smallest ``|det dw/du|`` and the
    largest gap between ``det dw/du`` and ``h_n'(u^n)^n``.
    """
    spec = j_preserving_spec(h)
    hs = [as_expression(hi, ("x",)) for hi in h]
    points = np.asarray(points, dtype=float)
    det = np.linalg.det(jacobian_g(spec, points))
    predicted = _derivative(hs[-1], points[..., -1]) ** spec.n
    return {
        "h1_prime_at_0": float(_derivative(hs[0], 0.0)),
        "hn_prime_at_0": float(_derivative(hs[-1], 0.0)),
        "min_abs_det": float(np.min(np.abs(det))),
        "det_minus_hn_prime_power": float(np.max(np.abs(det - predicted))),
    }


def j_preserving_map(n, h, grid: Grid, det_floor=1e-12):
    """Grid functions ``w_1..w_n`` of the ``J``-preserving map built from ``h_1..h_n``."""
    h = list(h)
    if len(h) != n or grid.n != n:
        raise DimensionMismatch(f"need {n} functions on an {n}-dimensional grid")
    spec = j_preserving_spec(h)
    G = jacobian_g(spec, grid.points)
    det = np.abs(np.linalg.det(G))
    bad = det <= det_floor
    if np.any(bad):
        raise SingularJacobian("J-preserving map is not a coordinate change", _first_bad(bad, grid))
    g = eval_field(spec, grid.points).g
    return [GridFunction(grid, g[..., i]) for i in range(n)]


def compose_j_preserving(h, v):
    """``w(v(u))``: the ``J``-preserving map applied after the coordinates ``v``."""
    v = list(v)
    grid = v[0].grid
    spec = j_preserving_spec(h)
    pts = np.stack([vi.values for vi in v], axis=-1)
    g = eval_field(spec, pts).g
    return [GridFunction(grid, g[..., i]) for i in range(grid.n)]

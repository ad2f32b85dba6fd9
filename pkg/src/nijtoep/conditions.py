"""Residual checks for the linear PDE systems characterising Toeplitz Nijenhuis fields.

Four equivalent forms are available, all linear in the Jacobian
``G[i, j] = d g_i / d u^j``:

``eq1``
    covector equations ``J^2* dg_n = 0``, ``J^2* dg_{n-1} - 2 J* dg_n = 0`` and
    ``J^2* dg_i - 2 J* dg_{i+1} + dg_{i+2} = 0`` for ``i = 1..n-2``.
``eq2``
    the double commutator ``[[G, J], J] = 0``.
``eq3``
    column equations ``J^2 d_1 g = 0``, ``J^2 d_2 g - 2 J d_1 g = 0`` and
    ``J^2 d_i g - 2 J d_{i-1} g + d_{i-2} g = 0`` for ``i = 3..n``.
``mod2``
    ``d_{n-k} g = k J^{k-1} d_{n-1} g - (k-1) J^k d_n g`` for ``k = 2..n-1``
    together with ``J^{n-1} d_{n-1} g = 0``.

Pullbacks use ``(J^* a)_j = sum_i a_i J_ij``.  Residuals are max-abs norms
divided by ``1 + max|G|`` so that the forms are comparable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .field import local_data, nijenhuis_dense, normalized_magnitude
from .toeplitz import REGULARITY_THRESHOLD

__all__ = [
    "FORMS",
    "DEFAULT_TOLERANCE",
    "ConditionReport",
    "Classification",
    "condition_residuals",
    "check_condition",
    "classify",
]

FORMS = ("eq1", "eq2", "eq3", "mod2")
DEFAULT_TOLERANCE = 1e-9


def _pull(alpha, J):
    return alpha @ J


def _eq1(G, J):
    n = G.shape[-1]
    J2 = J @ J
    dg = lambda i: G[..., i - 1, :]  # noqa: E731
    eqs = [_pull(dg(n), J2)]
    if n >= 2:
        eqs.append(_pull(dg(n - 1), J2) - 2 * _pull(dg(n), J))
    for i in range(1, n - 1):
        eqs.append(_pull(dg(i), J2) - 2 * _pull(dg(i + 1), J) + dg(i + 2))
    return eqs


def _eq2(G, J):
    C = G @ J - J @ G
    return [C @ J - J @ C]


def _eq3(G, J):
    n = G.shape[-1]
    J2 = J @ J
    col = lambda i: G[..., :, i - 1]  # noqa: E731  d g / d u^i
    act = lambda A, x: np.einsum("ab,...b->...a", A, x)  # noqa: E731
    eqs = [act(J2, col(1))]
    if n >= 2:
        eqs.append(act(J2, col(2)) - 2 * act(J, col(1)))
    for i in range(3, n + 1):
        eqs.append(act(J2, col(i)) - 2 * act(J, col(i - 1)) + col(i - 2))
    return eqs


def _mod2(G, J):
    n = G.shape[-1]
    col = lambda i: G[..., :, i - 1]  # noqa: E731
    act = lambda A, x: np.einsum("ab,...b->...a", A, x)  # noqa: E731
    Jk = [np.linalg.matrix_power(J, k) for k in range(n + 1)]
    eqs = []
    for k in range(2, n):
        eqs.append(col(n - k) - k * act(Jk[k - 1], col(n - 1)) + (k - 1) * act(Jk[k], col(n)))
    eqs.append(act(Jk[n - 1], col(n - 1)))
    return eqs


_KERNELS = {"eq1": _eq1, "eq2": _eq2, "eq3": _eq3, "mod2": _mod2}


def condition_residuals(G, form):
    """Normalised residual of every equation of ``form``: array ``(..., n_equations)``."""
    if form not in _KERNELS:
        raise ValueError(f"unknown condition form {form!r}; expected one of {FORMS}")
    G = np.asarray(G, dtype=float)
    n = G.shape[-1]
    J = np.eye(n, k=1)
    scale = 1.0 + np.max(np.abs(G), axis=(-2, -1))
    res = []
    for eq in _KERNELS[form](G, J):
        axes = tuple(range(G.ndim - 2, eq.ndim))
        res.append(np.max(np.abs(eq), axis=axes) / scale)
    return np.stack(res, axis=-1)


@dataclass(frozen=True)
class ConditionReport:
    form: str
    per_equation_residuals: tuple
    max_residual: float
    passed: bool
    tolerance: float

    def as_dict(self):
        return {
            "form": self.form,
            "per_equation_residuals": list(self.per_equation_residuals),
            "max_residual": self.max_residual,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


def check_condition(spec, u, form, tolerance=DEFAULT_TOLERANCE, method="jet") -> ConditionReport:
    """Residual report for one condition form at a single point."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("check_condition takes a single point; use classify for batches")
    G = local_data(spec, u, method).G
    res = condition_residuals(G, form)
    worst = float(np.max(res))
    return ConditionReport(
        form=form,
        per_equation_residuals=tuple(float(r) for r in res),
        max_residual=worst,
        passed=worst <= tolerance,
        tolerance=tolerance,
    )


@dataclass
class Classification:
    """Aggregate verdicts over a list of sample points (in the given order)."""

    tolerance: float
    nijenhuis_by_torsion: bool
    passes: dict
    gl_regular_everywhere: bool
    torsion: np.ndarray = field(repr=False)
    residuals: dict = field(repr=False)
    regular: np.ndarray = field(repr=False)
    g_next_to_diagonal: np.ndarray = field(repr=False)

    @property
    def nijenhuis_outside_conditions(self):
        """Torsion vanishes but some condition form fails: only possible where not gl-regular."""
        return self.nijenhuis_by_torsion and not all(self.passes.values())

    def point_verdicts(self, form):
        return self.residuals[form] <= self.tolerance

    def as_dict(self):
        return {
            "tolerance": self.tolerance,
            "nijenhuis_by_torsion": self.nijenhuis_by_torsion,
            "passes": dict(self.passes),
            "gl_regular_everywhere": self.gl_regular_everywhere,
            "nijenhuis_outside_conditions": self.nijenhuis_outside_conditions,
            "max_torsion": float(np.max(self.torsion)),
            "max_residual": {f: float(np.max(r)) for f, r in self.residuals.items()},
            "regular_points": int(np.sum(self.regular)),
            "points": int(self.torsion.shape[0]),
            "min_abs_g_next_to_diagonal": float(np.min(np.abs(self.g_next_to_diagonal))),
        }


def _threads():
    try:
        return max(1, int(os.environ.get("NIJTOEP_THREADS", "1")))
    except ValueError:
        return 1


def _classify_chunk(spec, pts, method):
    d = local_data(spec, pts, method)
    L, dL = d.L, d.dL
    torsion = normalized_magnitude(nijenhuis_dense(L, dL), L, dL)
    res = {f: np.max(condition_residuals(d.G, f), axis=-1) for f in FORMS}
    return torsion, res, d.g[..., spec.n - 2]


def classify(spec, points, tolerance=DEFAULT_TOLERANCE, regularity_threshold=REGULARITY_THRESHOLD, method="jet"):
    """Torsion and all four condition forms over ``points`` (shape ``(m, n)``).

    Chunks of points may be processed on up to ``NIJTOEP_THREADS`` threads; the
    results are reassembled in point order.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("classify needs at least one point")
    workers = _threads()
    chunks = np.array_split(points, min(workers, points.shape[0]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _classify_chunk(spec, c, method), chunks))
    else:
        parts = [_classify_chunk(spec, c, method) for c in chunks]
    torsion = np.concatenate([p[0] for p in parts])
    residuals = {f: np.concatenate([p[1][f] for p in parts]) for f in FORMS}
    witness = np.concatenate([p[2] for p in parts])
    regular = np.abs(witness) > regularity_threshold
    return Classification(
        tolerance=tolerance,
        nijenhuis_by_torsion=bool(np.all(torsion <= tolerance)),
        passes={f: bool(np.all(residuals[f] <= tolerance)) for f in FORMS},
        gl_regular_everywhere=bool(np.all(regular)),
        torsion=torsion,
        residuals=residuals,
        regular=regular,
        g_next_to_diagonal=witness,
    )

"""Construct Nijenhuis operators in Toeplitz form from generating functions and certify them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import DEFAULT_TOLERANCE, FORMS, Classification, classify
from .errors import ArityMismatch, RegularityViolation
from .expressions import Expression, Var, as_expression, as_node
from .field import OperatorFieldSpec, coordinate_names, g_values
from .toeplitz import REGULARITY_THRESHOLD

__all__ = ["generate_operator", "certify", "Certificate", "to_direct", "sample_points"]


def generate_operator(
    n,
    f,
    include_f_n=True,
    require_regular=False,
    regularity_threshold=REGULARITY_THRESHOLD,
) -> OperatorFieldSpec:
    """``L = f_1(P,Q) J^{n-1} + ... + f_{n-1}(P,Q) J + f_n(P)``.

    ``f`` holds ``n-1`` functions of ``(p, q)`` followed, when ``include_f_n``,
    by one function of ``x``.  Entries may be DSL strings or expressions.
    With ``include_f_n=False`` the diagonal vanishes identically.
    """
    f = list(f)
    expected = n if include_f_n else n - 1
    if len(f) != expected:
        raise ArityMismatch(f"need {expected} generating functions for n={n}, got {len(f)}")
    two = [as_expression(fi, ("p", "q")) for fi in f[: n - 1]]
    one = as_expression(f[n - 1], ("x",)) if include_f_n else None
    if require_regular:
        corner = float(two[-1](0.0, 0.0))
        if abs(corner) <= regularity_threshold:
            raise RegularityViolation(f"f_{n - 1}(0, 0) = {corner:g} does not exceed {regularity_threshold:g}")
    return OperatorFieldSpec.generated(two, one)


@dataclass
class Certificate:
    passed: bool
    max_torsion: float
    classification: Classification

    def as_dict(self):
        out = {"passed": self.passed, "max_torsion": self.max_torsion}
        out.update(self.classification.as_dict())
        return out


def certify(spec, points, tolerance=DEFAULT_TOLERANCE) -> Certificate:
    """Pass iff the torsion and all condition forms vanish at every point."""
    summary = classify(spec, points, tolerance)
    ok = summary.nijenhuis_by_torsion and all(summary.passes[f] for f in FORMS)
    return Certificate(passed=ok, max_torsion=float(np.max(summary.torsion)), classification=summary)


def sample_points(n, count, seed=0, delta=0.5):
    """Uniform random points in the box ``[0, delta]^n``."""
    return np.random.default_rng(seed).uniform(0.0, delta, size=(count, n))


def to_direct(spec: OperatorFieldSpec) -> OperatorFieldSpec:
    """Expand a generated field into explicit expressions ``g_i(u1..un)``.

    The generating functions are evaluated over expression trees, so the result
    is exact (no numerical differentiation); trees are only constant-folded.
    """
    if spec.mode == "direct":
        return spec
    names = coordinate_names(spec.n)
    coords = [Var(v) for v in names]
    return OperatorFieldSpec.direct([Expression(as_node(x), names) for x in g_values(spec, coords)])

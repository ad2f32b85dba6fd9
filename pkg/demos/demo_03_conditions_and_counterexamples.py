"""
Linear conditions and what happens without regularity
======================================================

A Toeplitz field with ``g_{n-1} != 0`` is Nijenhuis exactly when its
coefficients satisfy a linear first-order system.  With ``g_{n-1} = 0`` there
are Nijenhuis fields that violate it.
"""

import numpy as np

from nijtoep import OperatorFieldSpec, check_condition, classify, haantjes_norm, sample_points

pts = sample_points(3, 100, seed=1)

###############################################################################
# ``a(u^3) Id + b E_13``: torsion vanishes, the first equation of ``eq1`` does not.
A = OperatorFieldSpec.direct(["u1*u2*u3", "0", "u3"])
rep = check_condition(A, [0.2, 0.4, 0.5], "eq1")
print("per-equation eq1 residuals for A:", rep.per_equation_residuals)

for name, spec in [("A", A), ("B", OperatorFieldSpec.direct(["0", "0", "1 + u1 + u2*u3"]))]:
    c = classify(spec, pts)
    print(
        name,
        "torsion", f"{np.max(c.torsion):.1e}",
        "haantjes", f"{np.max(haantjes_norm(spec, pts)):.1e}",
        "passes", c.passes,
        "gl-regular", c.gl_regular_everywhere,
    )

###############################################################################
# A generic quadratic field: all four forms fail together.
Q = OperatorFieldSpec.direct(["u1*u2 - 0.3*u3^2", "1 + 0.7*u1^2 + u2*u3", "0.2*u1 - u2^2"])
c = classify(Q, pts)
print("quadratic field: torsion", f"{np.max(c.torsion):.2f}", "passes", c.passes)

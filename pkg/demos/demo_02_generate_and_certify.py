"""
Generating Nijenhuis operators
==============================

``L = f_1(P,Q) J^{n-1} + ... + f_{n-1}(P,Q) J + f_n(P)`` has vanishing
Nijenhuis torsion for any choice of the generating functions.
"""

import numpy as np

from nijtoep import certify, generate_operator, sample_points, to_direct, torsion_norm

###############################################################################
# Four generating functions in dimension four.
L = generate_operator(4, ["p^2 - 3*q + 1", "p*q + q^2", "2 + p - 0.5*q^2", "x^3 - x + 4"])
pts = sample_points(4, 200, seed=0)
print("max normalised torsion:", np.max(torsion_norm(L, pts)))

###############################################################################
# The coefficients as explicit expressions in the coordinates.
for i, g in enumerate(to_direct(L).g, start=1):
    print(f"g_{i} =", g)

###############################################################################
# A certificate bundles the torsion with the four linear condition forms.
cert = certify(L, pts)
print("certified:", cert.passed)
print({k: v for k, v in cert.as_dict().items() if k in ("passes", "gl_regular_everywhere", "max_torsion")})

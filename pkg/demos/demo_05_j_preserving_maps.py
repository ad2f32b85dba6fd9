"""
Maps that preserve J
====================

The coefficients of ``h_1(P) J^{n-1} + ... + h_n(P)`` define a change of
coordinates under which ``J`` stays ``J``.  Its Jacobian determinant is
``h_n'(u^n)^n``; the other ``h_i`` do not matter for invertibility.
"""

import numpy as np

from nijtoep import Grid, OperatorFieldSpec, generate_operator, j_preserving_diagnostics, j_preserving_map
from nijtoep import compose_j_preserving, pushforward_check, run_algorithm, verify_sys

h = ["x^2 + 1", "sin(x)", "x + 0.3*x^2"]
grid = Grid(3, 12, 0.5)
w = j_preserving_map(3, h, grid)
J = OperatorFieldSpec.direct(["0", "1", "0"])
print("|W J W^-1 - J| =", pushforward_check(w, J, grid).j_deviation)
print(j_preserving_diagnostics(h, grid.points.reshape(-1, 3)))

###############################################################################
# Composing with a solution of the system gives another solution.
M = generate_operator(3, ["p^2 - q", "1 + p + 0.5*q^2"], include_f_n=False)
grid = Grid(3, 24, 0.5)
v = run_algorithm(M, "1 + x", ["x", "x^2"], grid).v
print("after composing:", verify_sys(compose_j_preserving(h, v), M, grid).residuals)

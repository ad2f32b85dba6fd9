"""
Coordinates in which a nilpotent field becomes J
================================================

For ``M = a(P,Q) J^3 + b(P,Q) J^2 + c(P,Q) J`` the functions ``v^1..v^4`` with
``M^* dv^i = dv^{i+1}`` are found by repeated integration on a Chebyshev grid.
In the new coordinates ``M`` is the constant Jordan block, and every other
Toeplitz field stays Toeplitz.
"""

import numpy as np
from scipy.integrate import quad

from nijtoep import Grid, OperatorFieldSpec, generate_operator, pushforward_check, run_algorithm

M = generate_operator(4, ["p*q - p", "p - q^2 + 0.5", "1 + 0.5*p + 0.3*q + p*q"], include_f_n=False)
grid = Grid(4, degree=16, delta=0.5)
res = run_algorithm(M, q="1 + x", r=["x^2", "sin(x)", "x/2"], grid=grid)
print("residuals of M^* dv^i - dv^(i+1):", res.sys.residuals)
print("min |dv^1/du^1|:", res.sys.min_abs_dv1_du1)

###############################################################################
# v^3 has a closed form: an integral of q(u^4) / c(u^4, t) plus r_3(u^4).
idx = (0, 0, 9, 12)
u3, u4 = grid.node(idx)[2:]
exact = quad(lambda t: (1 + u4) / (1 + 0.5 * u4 + 0.3 * t + u4 * t), 0, u3)[0] + u4 / 2
print("v^3 on the grid vs quadrature:", res.v[2].values[idx], exact)

###############################################################################
# Push M and another Toeplitz field forward.
print("M ->", pushforward_check(res.v, M, grid).as_dict())
L = OperatorFieldSpec.direct(["exp(u4)", "u3*u4", "2 + u3 + u4^2", "cos(u4)"])
print("L ->", pushforward_check(res.v, L, grid).as_dict())

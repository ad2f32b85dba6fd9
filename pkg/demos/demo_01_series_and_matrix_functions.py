"""
Truncated series and functions of Toeplitz matrices
===================================================

An upper triangular Toeplitz matrix ``g_1 J^{n-1} + ... + g_n Id`` behaves like
the polynomial ``g_n + g_{n-1} t + ... + g_1 t^{n-1}`` modulo ``t^n``.  So a
matrix function is just a truncated Taylor expansion.
"""

import numpy as np
import scipy.linalg as sla

from nijtoep import TruncatedSeries, ToeplitzCoeffs, build_PQ, matrix_function, parse
from nijtoep import series

###############################################################################
# Series arithmetic drops every power ``t^k`` with ``k >= order``.
a = TruncatedSeries([1.0, 1.0, 0.0, 0.0])  # 1 + t
print("(1+t)^2      =", (a * a).coeffs)
print("1/(1+t)      =", (1.0 / a).coeffs)
print("exp(1+t)     =", np.round(series.exp(a).coeffs, 6))

###############################################################################
# Coefficients can be arrays, so a whole batch is expanded at once.
x = np.linspace(0.0, 1.0, 5)
s = series.sin(TruncatedSeries.variable(x, 3))
print("sin, cos, -sin/2 at x:", np.round(np.array(s.coeffs), 4), sep="\n")

###############################################################################
# P and Q: the Toeplitz matrices of ``p(t) = u^n + ... + u^1 t^{n-1}`` and ``p'``.
P, Q = build_PQ(4, [0.1, 0.2, 0.3, 0.4])
print("P =", P.dense(), "Q =", Q.dense(), sep="\n")

###############################################################################
# A function of the commuting pair agrees with the dense computation.
f = parse("exp(p*q)", ("p", "q"))
F = matrix_function(f, P, Q)
print("max |f(P,Q) - expm(PQ)| =", np.max(np.abs(F.dense() - sla.expm(P.dense() @ Q.dense()))))

A = ToeplitzCoeffs(np.array([0.3, -0.2, 0.5, 1.7]))
root = matrix_function(parse("sqrt(x)", ("x",)), A)
print("max |sqrt(A)^2 - A|     =", np.max(np.abs(root.dense() @ root.dense() - A.dense())))

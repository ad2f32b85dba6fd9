"""Nijenhuis operator fields in upper triangular Toeplitz form.

Truncated power series and matrix functions of commuting Toeplitz pairs,
generation and certification of Nijenhuis fields, the linear PDE conditions,
and the integration algorithm for Toeplitz-preserving coordinate changes.
"""

__version__ = "0.1.0"

from .chart import Grid, GridFunction, grid_sample, partial_derivative, primitive_of_closed_form
from .conditions import FORMS, Classification, ConditionReport, check_condition, classify
from .errors import *  # noqa: F401,F403
from .expressions import Expression, evaluate, parse
from .field import (
    OperatorFieldSpec,
    bracket,
    eval_field,
    haantjes_norm,
    haantjes_torsion,
    jacobian_g,
    leibniz_residual,
    nijenhuis_torsion,
    structure_tensors,
    torsion_norm,
)
from .generator import Certificate, certify, generate_operator, sample_points, to_direct
from .series import TruncatedSeries, series_apply, series_arith
from .toeplitz import ToeplitzCoeffs, build_PQ, gl_regularity, matrix_function, toeplitz_mul
from .transform import (
    compose_j_preserving,
    j_preserving_diagnostics,
    j_preserving_map,
    pushforward_check,
    run_algorithm,
    solve_omega,
    verify_sys,
)

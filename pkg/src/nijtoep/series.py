"""Truncated power series (jets) of a fixed order.

A :class:`TruncatedSeries` of order ``n`` holds the coefficients
``c_0, ..., c_{n-1}`` of ``c_0 + c_1 t + ... + c_{n-1} t^{n-1}``; every term
``t^k`` with ``k >= n`` is dropped after each operation.

Coefficients are ring elements, not just floats: plain numbers, numpy arrays
(one series per array entry, evaluated in lockstep), symbolic expression nodes,
or other truncated series of a *lower* ``level``.  Nesting is how first
derivatives are pushed through the ``t`` expansion: a coordinate lifted to
``u + eps`` (a level ``-1`` series of order 2) can sit inside the coefficients
of a level ``0`` series in ``t``.

The module-level functions :func:`exp`, :func:`log`, :func:`sin`, :func:`cos`,
:func:`sqrt`, :func:`powi` and :func:`divide` accept any of these ring
elements, so code written against them (the expression evaluator in
particular) runs unchanged over reals, arrays and series.
"""

from __future__ import annotations

import math
from numbers import Number

import numpy as np

from .errors import DomainViolation, NonUnitDivisor, OrderMismatch

__all__ = [
    "UNIT_THRESHOLD",
    "TruncatedSeries",
    "series_arith",
    "series_apply",
    "exp",
    "log",
    "sin",
    "cos",
    "sqrt",
    "powi",
    "divide",
    "leaf",
]

UNIT_THRESHOLD = 1e-12

ELEMENTARY = ("exp", "log", "sin", "cos", "sqrt")


def _is_numeric(x):
    return isinstance(x, (Number, np.ndarray, np.generic))


def _is_zero(x):
    # only literal scalar zeros are skipped; arrays are never inspected
    return isinstance(x, (int, float)) and x == 0


def leaf(x):
    """Innermost constant term of a (possibly nested) ring element."""
    while isinstance(x, TruncatedSeries):
        x = x.coeffs[0]
    return x


def _check_unit(x, threshold):
    c = leaf(x)
    if _is_numeric(c) and not np.all(np.abs(c) > threshold):
        raise NonUnitDivisor(
            f"constant term {np.min(np.abs(c)):.3e} is not above the unit threshold {threshold:g}"
        )


def _check_positive(x, name, threshold):
    c = leaf(x)
    if _is_numeric(c) and not np.all(np.asarray(c) > threshold):
        raise DomainViolation(f"{name} of a non-positive constant term (min {np.min(c):.3e})")


class TruncatedSeries:
    """Truncated power series ``c_0 + c_1 t + ... + c_{order-1} t^{order-1}``.

    Instances are immutable.  ``level`` orders nested series: a series treats
    any series of lower level (and any non-series value) as a scalar.
    """

    __slots__ = ("coeffs", "level")
    # keep numpy from broadcasting over us; its reflected operators defer instead
    __array_ufunc__ = None

    def __init__(self, coeffs, order=None, level=0):
        coeffs = list(coeffs)
        if order is not None:
            if order < 1:
                raise ValueError("order must be positive")
            coeffs = (coeffs + [0.0] * order)[:order]
        if not coeffs:
            raise ValueError("a truncated series needs at least one coefficient")
        for c in coeffs:
            if _is_numeric(c) and not np.all(np.isfinite(c)):
                raise ValueError("series coefficients must be finite")
        self.coeffs = tuple(coeffs)
        self.level = level

    @classmethod
    def _raw(cls, coeffs, level):
        obj = object.__new__(cls)
        obj.coeffs = tuple(coeffs)
        obj.level = level
        return obj

    @classmethod
    def constant(cls, value, order, level=0):
        return cls._raw([value] + [0.0] * (order - 1), level)

    @classmethod
    def variable(cls, value, order, level=0):
        """The series ``value + t``."""
        if order == 1:
            return cls._raw([value], level)
        return cls._raw([value, 1.0] + [0.0] * (order - 2), level)

    @property
    def order(self):
        return len(self.coeffs)

    def __repr__(self):
        return f"TruncatedSeries({list(self.coeffs)!r}, level={self.level})"

    def __getitem__(self, k):
        return self.coeffs[k]

    def shift(self, m):
        """Multiply by ``t^m`` (and truncate)."""
        if m == 0:
            return self
        n = self.order
        return self._raw(([0.0] * m + list(self.coeffs))[:n], self.level)

    def _split(self, other):
        # "series" -> same ring, "scalar" -> acts on us as a scalar, None -> defer
        if isinstance(other, TruncatedSeries):
            if other.level == self.level:
                if other.order != self.order:
                    raise OrderMismatch(f"orders differ: {self.order} vs {other.order}")
                return "series"
            if other.level > self.level:
                return None
        return "scalar"

    def __neg__(self):
        return self._raw([-c for c in self.coeffs], self.level)

    def __pos__(self):
        return self

    def __add__(self, other):
        kind = self._split(other)
        if kind is None:
            return NotImplemented
        if kind == "scalar":
            return self._raw((self.coeffs[0] + other,) + self.coeffs[1:], self.level)
        return self._raw([a + b for a, b in zip(self.coeffs, other.coeffs)], self.level)

    __radd__ = __add__

    def __sub__(self, other):
        kind = self._split(other)
        if kind is None:
            return NotImplemented
        if kind == "scalar":
            return self._raw((self.coeffs[0] - other,) + self.coeffs[1:], self.level)
        return self._raw([a - b for a, b in zip(self.coeffs, other.coeffs)], self.level)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        kind = self._split(other)
        if kind is None:
            return NotImplemented
        if kind == "scalar":
            return self._raw([c * other for c in self.coeffs], self.level)
        a, b = self.coeffs, other.coeffs
        n = len(a)
        out = []
        for k in range(n):
            acc = 0.0
            for i in range(k + 1):
                if _is_zero(a[i]) or _is_zero(b[k - i]):
                    continue
                acc = acc + a[i] * b[k - i]
            out.append(acc)
        return self._raw(out, self.level)

    __rmul__ = __mul__

    def __truediv__(self, other):
        kind = self._split(other)
        if kind is None:
            return NotImplemented
        if kind == "scalar":
            _check_unit(other, UNIT_THRESHOLD)
            return self._raw([c / other for c in self.coeffs], self.level)
        return _series_div(self, other, UNIT_THRESHOLD)

    def __rtruediv__(self, other):
        # only reached when ``other`` is a scalar for this series
        return _series_div(TruncatedSeries.constant(other, self.order, self.level), self, UNIT_THRESHOLD)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)) or k < 0:
            return NotImplemented
        return _series_powi(self, int(k))

    def _elementary(self, name):
        return series_apply(name, self)


def _series_div(a, b, threshold):
    _check_unit(b.coeffs[0], threshold)
    b0 = b.coeffs[0]
    s = []
    for k in range(a.order):
        acc = a.coeffs[k]
        for j in range(1, k + 1):
            if _is_zero(b.coeffs[j]) or _is_zero(s[k - j]):
                continue
            acc = acc - b.coeffs[j] * s[k - j]
        s.append(acc / b0)
    return TruncatedSeries._raw(s, a.level)


def _series_powi(a, k):
    result = TruncatedSeries.constant(1.0, a.order, a.level)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def series_arith(a, b, op, unit_threshold=UNIT_THRESHOLD):
    """Apply ``op`` in {"add", "sub", "mul", "div"} to two series of equal order."""
    if a.order != b.order:
        raise OrderMismatch(f"orders differ: {a.order} vs {b.order}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return _series_div(a, b, unit_threshold)
    raise ValueError(f"unknown series operation {op!r}")


def _taylor_coefficients(name, c0, m):
    """``f^(k)(c0) / k!`` for ``k < m``; ``c0`` may itself be a ring element."""
    if name == "exp":
        e = exp(c0)
        return [e * (1.0 / math.factorial(k)) for k in range(m)]
    if name == "log":
        out = [log(c0)]
        inv = divide(1.0, c0)
        p = inv
        for k in range(1, m):
            out.append(p * ((-1.0) ** (k + 1) / k))
            p = p * inv
        return out
    if name in ("sin", "cos"):
        s, c = sin(c0), cos(c0)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[k % 4] * (1.0 / math.factorial(k)) for k in range(m)]
    if name == "sqrt":
        root = sqrt(c0)
        inv = divide(1.0, c0)
        out = [root]
        binom = 1.0
        p = root
        for k in range(1, m):
            binom *= (0.5 - (k - 1)) / k
            p = p * inv
            out.append(p * binom)
        return out
    raise ValueError(f"unknown function {name!r}")


def series_apply(func, a, k=None, unit_threshold=UNIT_THRESHOLD):
    """Taylor expansion of ``func(a)`` truncated at ``a.order``.

    ``func`` is one of ``exp, log, sin, cos, sqrt`` or ``"powi"`` (with
    exponent ``k``).  Elementary functions split ``a = c_0 + abar`` and
    compose the Taylor series of ``func`` at ``c_0`` with ``abar``.
    """
    if func == "powi":
        if k is None or k < 0:
            raise ValueError("powi needs a non-negative integer exponent")
        return _series_powi(a, int(k))
    if func in ("log", "sqrt"):
        _check_positive(a.coeffs[0], func, unit_threshold)
    m = a.order
    c0 = a.coeffs[0]
    d = _taylor_coefficients(func, c0, m)
    abar = TruncatedSeries._raw((0.0,) + a.coeffs[1:], a.level)
    result = TruncatedSeries.constant(d[0], m, a.level)
    power = abar
    for j in range(1, m):
        result = result + power * d[j]
        if j + 1 < m:
            power = power * abar
    return result


# ring-generic entry points ---------------------------------------------------


def _numeric_elementary(name, x):
    if name == "log":
        if not np.all(np.asarray(x) > 0):
            raise DomainViolation("log of a non-positive number")
        return np.log(x)
    if name == "sqrt":
        if not np.all(np.asarray(x) >= 0):
            raise DomainViolation("sqrt of a negative number")
        return np.sqrt(x)
    return getattr(np, name)(x)


def _elementary(name, x):
    if _is_numeric(x):
        return _numeric_elementary(name, x)
    return x._elementary(name)


def exp(x):
    return _elementary("exp", x)


def log(x):
    return _elementary("log", x)


def sin(x):
    return _elementary("sin", x)


def cos(x):
    return _elementary("cos", x)


def sqrt(x):
    return _elementary("sqrt", x)


def powi(x, k):
    if k < 0:
        raise ValueError("negative exponents are not supported; use division")
    if isinstance(x, TruncatedSeries):
        return _series_powi(x, k)
    return x ** k


def divide(a, b):
    """``a / b`` for ring elements, rejecting divisors with a vanishing constant term."""
    if _is_numeric(b):
        _check_unit(b, UNIT_THRESHOLD)
    return a / b

"""Exception hierarchy shared by every module of the package."""


class NijtoepError(Exception):
    """Base class for all errors raised by :mod:`nijtoep`."""


class OrderMismatch(NijtoepError, ValueError):
    pass


class NonUnitDivisor(NijtoepError, ArithmeticError):
    """Division by a series (or number) whose constant term is numerically zero."""


class DomainViolation(NijtoepError, ValueError):
    """log or sqrt applied outside its domain."""


class DimensionMismatch(NijtoepError, ValueError):
    pass


class ArityMismatch(NijtoepError, ValueError):
    pass


class ExpressionSyntaxError(NijtoepError, ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, text="", offset=0):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at offset {offset} in {text!r}")


class UnknownVariable(NijtoepError, ValueError):
    pass


class UnknownFunction(NijtoepError, ValueError):
    pass


class PreconditionViolation(NijtoepError, ValueError):
    pass


class RegularityViolation(NijtoepError, ValueError):
    """The coefficient next to the diagonal is too small somewhere.

    ``node`` holds the coordinates of the first offending point, when known.
    """

    def __init__(self, message, node=None):
        self.node = None if node is None else tuple(float(c) for c in node)
        if self.node is not None:
            message = f"{message} at u={self.node}"
        super().__init__(message)


class InconsistentSystem(NijtoepError, ValueError):
    pass


class ClosednessViolation(NijtoepError, ValueError):
    pass


class SingularJacobian(NijtoepError, ValueError):
    def __init__(self, message, node=None):
        self.node = None if node is None else tuple(float(c) for c in node)
        if self.node is not None:
            message = f"{message} at u={self.node}"
        super().__init__(message)


class GridEvaluationError(NijtoepError, ValueError):
    def __init__(self, message, node):
        self.node = tuple(float(c) for c in node)
        super().__init__(f"{message} at node u={self.node}")

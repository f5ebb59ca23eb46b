"""Exception types raised by shiftcalc."""


class ShiftCalcError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(ShiftCalcError, ValueError):
    pass


class DomainError(ShiftCalcError, ValueError):
    """Evaluation requested outside the time interval or the chart box of a flow.

    ``points`` holds the offending inputs so callers can report them.
    """

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class NumericFailure(ShiftCalcError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoClosedOrbits(ShiftCalcError, ValueError):
    pass


class ChartFailure(ShiftCalcError, RuntimeError):
    pass


class InconsistentKernel(ShiftCalcError, RuntimeError):
    pass


class TheoremViolation(ShiftCalcError, RuntimeError):
    """A probe contradicts a structure theorem; signals a bug or a tolerance failure."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

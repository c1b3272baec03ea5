"""Exception hierarchy.

The CLI maps these onto exit codes: ``DomainError`` and ``ConfigError``
exit with 2, ``NumericalError`` (and subclasses) with 3.
"""


class SwivelError(Exception):
    """Base class for all package errors."""


class ConfigError(SwivelError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class DomainError(SwivelError, ValueError):
    """Inputs violate a mathematical precondition (degenerate arm, no triangle...)."""


class DegenerateArmError(DomainError):
    """Some signed sum of the joint lengths vanishes.

    ``witness`` holds the offending sign vector.
    """

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = tuple(witness)


class ChartExitError(DomainError):
    """A geodesic left the chart domain; ``point`` is the last in-chart position."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalError(SwivelError, ArithmeticError):
    """An iterative method failed to meet its tolerance within its budget."""


class KitePropertyError(NumericalError):
    """The closure equation did not have exactly two roots."""

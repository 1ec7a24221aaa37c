"""
Exception hierarchy shared by the contest, dynamics and analysis packages.
"""


class ContestError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(ContestError, ValueError):
    """Malformed profile, cost, parameter or schedule."""


class UnsupportedContestError(ContestError):
    """Operation is not defined for the given contest configuration."""


class NumericalRangeError(ContestError, ArithmeticError):
    """A root could not be bracketed inside the admissible range."""


class ScheduleExhausted(ContestError):
    """An explicit selection schedule has no entry for the current step."""


class BetaContractError(ContestError):
    """A discount coefficient left the interval [0, B]."""


class FitError(ContestError):
    """Measured data is too degenerate to fit a rate model."""


class ConfigError(ContestError):
    """Experiment document failed validation."""


class SweepCellError(ContestError):
    """One or more sweep cells crashed; partial results were written."""

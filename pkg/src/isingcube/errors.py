"""Exception hierarchy shared by the library and the CLI.

The CLI maps each class to a distinct exit code, so library code should
raise the most specific one that applies.
"""


class IsingCubeError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParameterError(IsingCubeError):
    """An argument violates a documented precondition."""

    exit_code = 2


class CapabilityError(IsingCubeError):
    """The request is valid but exceeds a supported size/resource cap."""

    exit_code = 3


class PrecisionError(IsingCubeError):
    """A numerical result could not be certified to the required accuracy."""

    exit_code = 4


class BudgetError(IsingCubeError):
    """The projected computational cost exceeds the configured budget."""

    exit_code = 5


class InvariantViolation(IsingCubeError):
    """A cross-checked internal invariant failed; results would be unsound."""

    exit_code = 1

"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input and missing data are
usage/validation failures (exit 1); infeasible generation requests and
enumeration blow-ups are resource problems (exit 2).
"""


class SwitchIdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SwitchIdError, ValueError):
    """An argument violates a documented precondition."""


class NoDataError(SwitchIdError):
    """An operation that needs at least one data point received none."""


class InfeasibleSpecError(SwitchIdError):
    """No signal of the requested length can satisfy the class constraints."""


class ResourceLimitError(SwitchIdError):
    """An exhaustive enumeration would exceed the configured cap."""


class CertificationError(SwitchIdError):
    """A decay envelope or stability certificate could not be established."""

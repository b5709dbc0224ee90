"""Exception hierarchy. The CLI maps each class to an exit code."""


class OscsumError(Exception):
    """Base class for library errors."""

    exit_code = 5


class DomainError(OscsumError, ValueError):
    """Input outside the domain of an operation (bad shape, non-finite value, ...)."""

    exit_code = 2


class PreconditionError(OscsumError, ValueError):
    """A hypothesis of the statement being tested does not hold for the input."""

    exit_code = 4


class BudgetError(OscsumError, RuntimeError):
    """The instance exceeds a configured enumeration or memory budget."""

    exit_code = 3

"""Exception types shared across the package."""


class BetaExpError(Exception):
    """Base class for all package errors."""


class PrecisionExhausted(BetaExpError):
    """An interval could not be refined enough within the precision budget."""


class DomainError(BetaExpError, ValueError):
    """An argument lies outside the domain of an operation."""


class HorizonExceeded(BetaExpError):
    """A digit search ran past its horizon without resolving."""


class NotInDomain(DomainError):
    """A point is not in the domain of the digit-transport map."""


class ScheduleInfeasible(BetaExpError):
    """No sparse schedule could be found within the search horizon."""


class BoundViolation(BetaExpError):
    """A proven inequality failed under exact evaluation (an implementation bug)."""


class VerificationError(BetaExpError, AssertionError):
    """An exact identity that must hold did not."""


class EmptyAggregate(BetaExpError, ValueError):
    """No usable records to summarise."""


class EnumerationRefused(BetaExpError):
    """Word enumeration would exceed the configured size guard."""

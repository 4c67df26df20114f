"""Exact beta-expansions and the experiments built on them."""
from .errors import (BetaExpError, BoundViolation, DomainError, EmptyAggregate,
                     EnumerationRefused, HorizonExceeded, NotInDomain, PrecisionExhausted,
                     ScheduleInfeasible, VerificationError)
from .exactnum import Interval, Ordering, Quadratic, compare, serialize, to_decimal
from .expansion import Beta, DigitSeq, approx_error, digits, iterate, transform, value_of
from .shift import Word, count_admissible, cylinder, is_admissible
from .phi import PhiFunction

__version__ = "0.1.0"

__all__ = [
    "Beta", "BetaExpError", "BoundViolation", "DigitSeq", "DomainError", "EmptyAggregate",
    "EnumerationRefused", "HorizonExceeded", "Interval", "NotInDomain", "Ordering",
    "PhiFunction", "PrecisionExhausted", "Quadratic", "ScheduleInfeasible",
    "VerificationError", "Word", "approx_error", "compare", "count_admissible", "cylinder",
    "digits", "is_admissible", "iterate", "serialize", "to_decimal", "transform", "value_of",
]

from typing import Any, Optional


class RepeatFreeError(Exception):
    """Base class for all errors raised by repeatfree."""


class PatternSpecError(RepeatFreeError, ValueError):
    """A pattern spec string could not be parsed into a pattern graph."""


class PreconditionError(RepeatFreeError, ValueError):
    """An operation was called outside of its documented domain."""


class ExactLimitError(PreconditionError):
    """An exact computation was requested beyond its enforced size limits."""


class SingularSystemError(PreconditionError):
    """A linear system over a prime field has no unique solution."""


class FieldOverflowError(RepeatFreeError, ValueError):
    """A prime modulus would not fit into the supported 32-bit width."""


class FormatError(RepeatFreeError, ValueError):
    """A colouring, certificate or results file is malformed."""


class BudgetExhausted(RepeatFreeError, RuntimeError):
    """A randomized or budgeted procedure ran out of attempts.

    Args:
        message: Human readable description.
        last_event: The last violating event or measurement, for the caller to inspect.
    """

    def __init__(self, message: str, last_event: Optional[Any] = None):
        super().__init__(message)
        self.last_event = last_event


class ResampleBudgetExhausted(BudgetExhausted):
    """The resampling loop did not converge within its budget and back-offs."""


class RetryBudgetExhausted(BudgetExhausted):
    """Rejection sampling of random polynomials did not produce a bounded colouring."""

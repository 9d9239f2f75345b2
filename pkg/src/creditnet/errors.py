"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` so callers (and the
CLI exit-code mapping) can catch them as a group.
"""


class CreditNetError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CreditNetError):
    pass


class InvariantViolation(ValidationError):
    """A value breaks a model invariant."""


class NonSquareMatrix(InvariantViolation):
    pass


class NegativeAmount(InvariantViolation):
    pass


class NonzeroDiagonal(InvariantViolation):
    pass


class DuplicateLabel(InvariantViolation):
    pass


class DimensionMismatch(InvariantViolation):
    pass


class PaymentExceedsLiability(InvariantViolation):
    pass


class InvalidConfig(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class NotConverged(CreditNetError):
    """Clearing hit ``max_iterations``; carries the last iterate."""

    def __init__(self, message, payments=None, residual=None, iterations=None):
        super().__init__(message)
        self.payments = payments
        self.residual = residual
        self.iterations = iterations


class CycleLimitExceeded(CreditNetError):
    pass


class StaleCycle(ValidationError):
    pass


class NoSuchDebt(ValidationError):
    pass


class DuplicateEdge(ValidationError):
    pass


class SearchSpaceTooLarge(CreditNetError):
    pass


class MalformedRecord(ValidationError):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class UnknownTemplate(ValidationError):
    pass


class TransportError(CreditNetError):
    pass


class MalformedPlan(ValidationError):
    pass


class InvalidPlan(ValidationError):
    pass


class SelfLoop(InvariantViolation):
    pass

class RecenvError(Exception):
    """Base class for all errors raised by recenv."""


class ArgumentError(RecenvError, ValueError):
    """An argument violates an operation's precondition."""


class DomainError(RecenvError, ValueError):
    """A query point lies outside the region where a quantity is defined."""


class NumericalError(RecenvError, ArithmeticError):
    """A numerical procedure failed (factorization, horizon, overflow)."""

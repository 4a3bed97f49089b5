"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the operation's domain."""


class CapacityError(ValueError):
    """The request exceeds what the implementation supports."""


class NumericConsistencyError(ArithmeticError):
    """A computed quantity violates an invariant it must satisfy."""

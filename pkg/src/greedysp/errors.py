"""Exception types shared across modules."""


class GuardError(RuntimeError):
    """An enumeration would exceed its size guard and was refused."""


class InvariantError(RuntimeError):
    """An internal consistency check failed."""

class ValidationError(ValueError):
    """Bad input: malformed files, unknown vertices, violated preconditions."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or lost its accuracy guarantee."""

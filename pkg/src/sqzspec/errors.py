"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for malformed or out-of-domain parameters."""


class InfeasibleError(ValueError):
    """Raised when requested squeezing parameters violate |M|^2 <= N(N+1)."""


class DegenerateInputError(ValueError):
    """Raised when the master-equation generator has no unique stationary state."""

"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter is outside its admissible range or inconsistent."""


class ConvergenceError(RuntimeError):
    """The iterative linear solver did not reach the tolerance within its cap."""


class CapacityError(RuntimeError):
    """An exhaustive enumeration would exceed its candidate cap."""

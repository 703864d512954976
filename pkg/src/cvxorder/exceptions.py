"""Exception types raised across the package."""


class InvalidInput(ValueError):
    """Arguments outside an operation's domain (empty samples, bad budget, ...)."""


class DimensionError(InvalidInput):
    """Measures or arrays whose ambient dimensions do not match."""


class SolverError(RuntimeError):
    """An LP solve did not terminate at a verified optimum."""

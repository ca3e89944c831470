"""Exception types shared across the package."""


class ChemoboundError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(ChemoboundError, ValueError):
    """A parameter violates a precondition (sign, range, or consistency)."""


class SingularityError(ChemoboundError, ValueError):
    """An exponent map was evaluated at or past its singular point."""


class InfeasibleError(ChemoboundError, ValueError):
    """The admissible parameter box is empty."""


class NonpositiveDenominatorError(ChemoboundError, ValueError):
    """The bound integrand's denominator is nonpositive somewhere on the
    integration range."""

    def __init__(self, message: str, root: float | None = None):
        super().__init__(message)
        self.root = root


class DivergenceError(ChemoboundError, ValueError):
    """The bound integral diverges (no superlinear power term)."""


class ConfigError(ChemoboundError, ValueError):
    """A run configuration is malformed (unknown key, bad value, missing
    required entry)."""

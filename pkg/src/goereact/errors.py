"""Exception types shared across the package."""


class GoeReactError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(GoeReactError):
    """Invalid configuration file, key, or parameter value."""


class NumericalError(GoeReactError):
    """Base class for numerical failures during a computation."""


class EigensolverError(NumericalError):
    """Symmetric eigendecomposition did not converge."""


class SingularSystemError(NumericalError):
    """A linear system that should be regular came out singular."""


class DegenerateDenominatorError(NumericalError):
    """Closed-form denominator too small to divide by."""


class DegenerateEnsembleError(NumericalError):
    """Ensemble statistics unusable (bad mean or too many exclusions)."""


class InsufficientDataError(NumericalError):
    """Not enough usable data points for a fit."""


class ZeroVarianceError(NumericalError):
    """Sample variance vanished where a spread is required."""


class BranchingOverflowError(NumericalError):
    """Branching ratio diverges because the decay probability reached 1."""

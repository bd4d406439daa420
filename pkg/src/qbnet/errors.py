"""Exception hierarchy shared by every qbnet module."""


class QBNetError(Exception):
    """Base class for all library errors."""


class DimensionCapError(QBNetError, ValueError):
    """Raised when a qubit count or matrix size exceeds the dense-storage cap."""


class DensityError(QBNetError, ValueError):
    """A matrix failed density-operator validation.

    ``value`` carries the violated quantity (residual, trace or eigenvalue).
    """

    def __init__(self, message, value):
        super().__init__(message)
        self.value = value


class NotHermitian(DensityError):
    pass


class TraceNotOne(DensityError):
    pass


class NotPSD(DensityError):
    pass


class NotNormalized(QBNetError, ValueError):
    """A state vector does not have unit norm."""


class ImaginaryResidueError(QBNetError, ArithmeticError):
    """A quantity that must be real came out with a non-negligible imaginary part."""


class StochasticityError(QBNetError, ArithmeticError):
    """A transition matrix or probability vector violates stochasticity beyond tolerance.

    This signals a generator or basis bug, never a numerical wobble.
    """


class NotRelaxing(QBNetError):
    """The generator does not have a unique attracting steady state."""


class NotErgodic(QBNetError):
    """The chain is not irreducible and aperiodic."""


class NoConvergence(QBNetError, ArithmeticError):
    """An iterative solver hit its iteration cap."""


class ConfigError(QBNetError, ValueError):
    """An experiment configuration could not be parsed or validated."""

"""Exception hierarchy shared by every goalsens module."""


class GoalsensError(Exception):
    """Base class for all errors raised by goalsens."""


class ConfigError(GoalsensError, ValueError):
    """Invalid configuration of a model or an experiment."""


class DimensionMismatch(GoalsensError, ValueError):
    """Operands with non-conforming shapes."""


class NumericalError(GoalsensError, ArithmeticError):
    """Base class for failures of the numerics (CLI exit code 3)."""


class SingularSystem(NumericalError):
    """The (regularised) normal equations are numerically singular.

    Usually means the ensemble deviations have lost linear independence.
    """


class DegenerateVector(NumericalError):
    """Gram-Schmidt cancelled a vector down to round-off."""


class RetriesExhausted(NumericalError):
    """Fresh random draws kept producing degenerate perturbations."""


class BlowUp(NumericalError):
    """A forward model produced non-finite values."""


class ZeroGoalMap(GoalsensError, ValueError):
    """Goal weighting requested with an identically zero sensitivity map."""


class WindowMisalignment(ConfigError):
    """Time windows do not tile the simulated horizon."""

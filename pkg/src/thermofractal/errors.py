"""Exception hierarchy shared by all modules."""


class ThermoError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ThermoError, ValueError):
    """An argument lies outside the region where the operation is defined."""


class CriticalPointError(ThermoError, ArithmeticError):
    """|Df| fell below the derivative floor."""


class BudgetError(ThermoError):
    """A combinatorial enumeration would exceed its configured budget."""


class ConvergenceError(ThermoError, ArithmeticError):
    """An iterative solver did not reach its tolerance."""


class NonFiniteWeight(ThermoError, ArithmeticError):
    """A Birkhoff sum or weight evaluated to NaN or infinity."""


class PowerIterationStall(ConvergenceError):
    """Power iteration hit its iteration cap before the eigenvalue bracket closed."""


class DivergentSum(ThermoError, ArithmeticError):
    """A countable branch sum failed the geometric tail test."""


class BracketError(ThermoError):
    """A root bracket could not be established, or the sign pattern is not monotone."""


class NotNormalized(ThermoError, ValueError):
    """The potential does not satisfy P(phi) = 0."""


class NotMarkovBase(ThermoError, ValueError):
    """The requested inducing base is not a supported union of cylinders."""


class NotApplicable(ThermoError):
    """The requested report does not apply to this input."""


class InsufficientData(ThermoError):
    """Too few samples to produce a statistically meaningful estimate."""


class DepthError(ThermoError):
    """Cylinders at the available depth cannot resolve the requested radius."""


class ConfigError(ThermoError, ValueError):
    """A run configuration is malformed or contains unknown keys."""

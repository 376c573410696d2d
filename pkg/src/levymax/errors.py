"""Exception hierarchy shared across the package."""


class LevyMaxError(Exception):
    """Base class for all errors raised by levymax."""


class UnsupportedSidedness(LevyMaxError, ValueError):
    pass


class InvalidModel(LevyMaxError, ValueError):
    pass


class NoRoot(LevyMaxError, ArithmeticError):
    pass


class NonConvergence(LevyMaxError, ArithmeticError):
    pass


class DegenerateDerivative(LevyMaxError, ArithmeticError):
    pass


class InvalidRate(LevyMaxError, ValueError):
    pass


class InvalidHorizon(LevyMaxError, ValueError):
    pass


class InvalidProbability(LevyMaxError, ValueError):
    pass


class LengthMismatch(LevyMaxError, ValueError):
    pass


class IndexOutOfRange(LevyMaxError, IndexError):
    pass


class NegativeInput(LevyMaxError, ValueError):
    pass


class NegativeSecondCoordinate(NegativeInput):
    pass


class InfiniteMean(LevyMaxError, ValueError):
    pass


class SingularDenominator(LevyMaxError, ZeroDivisionError):
    pass


class InfiniteSecondMoment(LevyMaxError, ArithmeticError):
    pass


class QuadratureFailure(LevyMaxError, ArithmeticError):
    pass


class EmptySample(LevyMaxError, ValueError):
    pass


class DegenerateCells(LevyMaxError, ValueError):
    pass


class TruncationTooCoarse(LevyMaxError, ValueError):
    pass


class ConfigError(LevyMaxError, ValueError):
    pass

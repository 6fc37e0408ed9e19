"""Exception types raised across the package."""


class MGarchError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InvalidParameter(MGarchError, ValueError):
    exit_code = 2


class NonStationary(MGarchError, ValueError):
    exit_code = 2


class NoRoot(MGarchError, ArithmeticError):
    pass


class SingularGram(MGarchError, ArithmeticError):
    pass


class SingularG(MGarchError, ArithmeticError):
    pass


class NotConverged(MGarchError, RuntimeError):
    pass


class TooFewReplicates(MGarchError, ValueError):
    pass


class DataError(MGarchError, ValueError):
    exit_code = 4


class ParseError(DataError):
    pass


class EmptySeries(DataError):
    pass


class NonPositivePrice(DataError):
    pass

"""

    rln2.utils.errors.py
    ~~~~~~~~~~~~~~~~~~~~
    Exceptions raised deliberately by this package.

    @author: z33k

"""


class Rln2Error(Exception):
    """Base of all errors raised deliberately by this package.
    """


class ShapeError(Rln2Error, ValueError):
    """Raised on wrong array shapes, channel counts or spatial mismatches.
    """


class RangeError(Rln2Error, ValueError):
    """Raised on values outside of their declared range.
    """


class ConfigError(Rln2Error, ValueError):
    """Raised on invalid model, training or experiment configuration.
    """


class DataIntegrityError(Rln2Error):
    """Raised on broken dataset layouts, missing counterpart files or foreign checkpoints.
    """


class NumericalError(Rln2Error, ArithmeticError):
    """Raised on numerical failures, e.g. a non-finite training loss.
    """

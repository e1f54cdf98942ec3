class EbglmError(Exception):
    """Base class for package errors."""


class DataError(EbglmError, ValueError):
    """Dataset shape, content, or family-support violation."""


class GlmRangeError(EbglmError, ArithmeticError):
    """Linear predictor outside the representable range (poisson overflow)."""


class SingularInformationError(EbglmError, ArithmeticError):
    """Information matrix is not positive definite (collinear columns)."""


class NonConvergenceError(EbglmError, RuntimeError):
    """Newton solver hit its iteration cap away from the box bound."""


class UnsupportedError(EbglmError, ValueError):
    """Request outside a brute-force routine's scale guard."""

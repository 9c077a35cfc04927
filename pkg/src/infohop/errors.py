"""Exception types shared across the package."""


class InfohopError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(InfohopError, ValueError):
    """Shapes or sizes of inputs are inconsistent or out of range."""


class ParameterError(InfohopError, ValueError):
    """A parameter value is outside its documented domain."""


class NormalizationError(InfohopError, ValueError):
    """A probability vector or tensor is not normalized (or has negative mass)."""


class NumericDomainError(InfohopError, ArithmeticError):
    """A numeric operation left its domain (e.g. log of a nonpositive value)."""

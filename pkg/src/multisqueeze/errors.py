"""Exception types shared across the package."""


class SqueezeError(Exception):
    """Base class for all package errors."""


class ExponentOutOfRange(SqueezeError, ValueError):
    """Strength exponent p > 2: the layer phase q*l is unbounded as l -> 0."""


class NonPositiveWidth(SqueezeError, ValueError):
    pass


class SingularMatching(SqueezeError, ArithmeticError):
    """Plane-wave matching denominator vanished."""


class ZeroWavenumber(SqueezeError, ZeroDivisionError):
    pass


class CosineZero(SqueezeError, ZeroDivisionError):
    pass


class TooManyLayers(SqueezeError, ValueError):
    pass


class ScheduleTooShort(SqueezeError, ValueError):
    pass


class NumericalOverflow(SqueezeError, OverflowError):
    """Entries crossed the divergence floor; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class Unclassifiable(SqueezeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ClassMismatch(SqueezeError, ValueError):
    pass


class InadmissibleConfiguration(SqueezeError, ValueError):
    """The strength configuration admits no resonance equation of the requested kind.

    ``rule`` names the violated condition in words.
    """

    def __init__(self, message, rule=""):
        super().__init__(message)
        self.rule = rule


class UnboundSymbol(SqueezeError, KeyError):
    pass


class ConfigError(SqueezeError, ValueError):
    pass

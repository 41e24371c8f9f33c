"""Exception hierarchy shared by all modules."""


class RadialKahlerError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(RadialKahlerError, SyntaxError):
    """Malformed expression text. ``pos`` is the 0-based character offset."""

    def __init__(self, message, text="", pos=0):
        super().__init__(f"{message} at position {pos}")
        self.msg = message
        self.text = text
        self.pos = pos


class DomainError(RadialKahlerError, ValueError):
    """A quantity was requested outside the region where it is defined."""


class UnsupportedTerm(RadialKahlerError, ValueError):
    """A term has no closed-form antiderivative inside the exp-Laurent class."""


class DegreeRangeError(RadialKahlerError, ValueError):
    """Generalized scalar curvature index outside ``1..n``."""


class IllConditioned(RadialKahlerError, ArithmeticError):
    """Least-squares system too degenerate to trust."""


class SignError(RadialKahlerError, ValueError):
    """An even root of a negative radicand was requested."""


class ParamError(RadialKahlerError, ValueError):
    """Inconsistent family parameters."""


class StepFailure(RadialKahlerError, RuntimeError):
    """The step-size controller underflowed. ``state`` holds ``(t, y)``."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class SingularMatrix(RadialKahlerError, ArithmeticError):
    """The metric matrix is not positive definite at a sample site."""


class StencilOutOfDomain(DomainError):
    """A finite-difference stencil point left the validity interval."""

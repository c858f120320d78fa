"""Exception hierarchy shared by every module."""


class SketchError(Exception):
    """Base class for all errors raised by sketchspec."""


class ShapeError(SketchError, ValueError):
    """Operand dimensions are inconsistent."""


class NonFiniteError(SketchError, ValueError):
    """A matrix contains NaN or infinite entries."""


class NoSpectrum(SketchError, ValueError):
    """The operation needs a nonzero matrix."""


class NumericalFailure(SketchError, ArithmeticError):
    """An iterative routine failed to converge."""


class DegenerateDistribution(SketchError, ValueError):
    """A sampling distribution has no usable mass."""


class InvalidQuery(SketchError, ValueError):
    """A sample-size query is out of range."""


class PreconditionViolation(SketchError, ValueError):
    """A documented precondition of a probabilistic routine does not hold."""


class MismatchedProblem(SketchError, ValueError):
    """Two solutions do not refer to the same regression problem."""


class InvalidSpec(SketchError, ValueError):
    """A generator specification is malformed."""


class ConfigError(SketchError, ValueError):
    """An experiment configuration is malformed."""


class ParseError(SketchError, ValueError):
    """A matrix file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

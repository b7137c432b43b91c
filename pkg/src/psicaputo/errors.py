"""Exception hierarchy shared by every module of the package."""


class PsiCaputoError(Exception):
    """Base class for all errors raised by psicaputo."""


class InputError(PsiCaputoError, ValueError):
    """An argument violates a documented precondition."""


class NumericalError(PsiCaputoError, ArithmeticError):
    """A numerical procedure failed."""


class EvaluationError(NumericalError):
    """An expression could not be evaluated to a finite real number."""


class SingularProblemError(NumericalError):
    """A boundary determinant vanishes, so the linear problem is not solvable."""


class ConvergenceError(NumericalError):
    """An iteration did not reach its tolerance.

    ``best`` carries the last (or best) available value and ``history`` the
    recorded error or increment sequence.
    """

    def __init__(self, message, best=None, history=()):
        super().__init__(message)
        self.best = best
        self.history = tuple(history)


class UnsupportedOperationError(PsiCaputoError):
    """The requested operation is not defined for this input."""


class ExpressionError(InputError):
    """Base class for lexical, syntactic and name errors in expressions."""

    def __init__(self, message, position=None, source=None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class LexicalError(ExpressionError):
    pass


class ExpressionSyntaxError(ExpressionError):
    pass


class UnknownIdentifierError(ExpressionError):
    pass


class ConfigError(InputError):
    """Malformed or invalid problem configuration file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

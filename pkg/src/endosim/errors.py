"""Exception hierarchy shared across the package."""


class EndosimError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(EndosimError, ValueError):
    """A caller passed an argument outside an operation's domain."""


class EvaluationError(EndosimError):
    """A user function returned a non-finite value at a quadrature node."""


class KernelError(EndosimError):
    """A coagulation kernel violated nonnegativity or shape requirements."""


class ConfigError(EndosimError):
    """Scenario lookup or config-file resolution failed."""


class NumericsError(EndosimError):
    """The scheme produced non-finite values or violated a hard invariant."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonConvergenceError(EndosimError):
    """An iterative solver hit its iteration cap.

    Carries the last iterate diagnostics so callers can report them.
    """

    def __init__(self, message, iterations=None, residual=None, contraction=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.contraction = contraction


class InsufficientSignalError(EndosimError):
    """A fit was requested on data that is entirely below the noise floor."""

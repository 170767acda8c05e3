"""Exception hierarchy shared by the library and the CLI."""


class RwerError(Exception):
    pass


class GraphFormatError(RwerError, ValueError):
    """Malformed edge list; ``lineno`` is 1-based, or None for whole-file problems."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DimensionError(RwerError, ValueError):
    pass


class DenseLimitExceeded(RwerError, ValueError):
    pass


class NumericalError(RwerError, ArithmeticError):
    """Base class for solver failures (CLI exit code 3)."""


class NonConvergence(NumericalError):
    def __init__(self, what, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{what} did not converge after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )


class SingularMatrix(NumericalError):
    pass

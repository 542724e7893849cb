"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An input violated a documented precondition."""


class FormatError(InvalidArgument):
    """A hypergraph or overestimate file could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class SolverFailure(RuntimeError):
    """An iterative solve did not reach its tolerance."""

    def __init__(self, message, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, relative residual={residual:.3e})")


class InternalError(RuntimeError):
    """A state that valid input cannot produce."""

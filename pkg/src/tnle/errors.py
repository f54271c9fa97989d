"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """An iterative numerical routine failed (non-convergence, divergence, singularity)."""


class ParseError(ValueError):
    """Malformed input file. Carries the file name and, when known, the line number."""

    def __init__(self, message, path=None, line=None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where += ": "
        super().__init__(where + message)

"""Exception hierarchy shared by all analysis modules.

Each class carries the process exit code the CLI maps it to.
"""


class KTNError(Exception):
    exit_code = 1


class DomainError(KTNError, ValueError):
    """An argument is outside the domain of the operation (T <= 0, bad range, ...)."""

    exit_code = 1


class StructuralError(KTNError, ValueError):
    """The network or a state set is malformed (dangling index, overlap, ...)."""

    exit_code = 2


class ParseError(StructuralError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class ConvergenceError(KTNError, RuntimeError):
    exit_code = 3

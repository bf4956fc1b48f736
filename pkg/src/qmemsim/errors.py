"""Exception types shared by the simulator, device models, and toolchain."""


class QmemError(Exception):
    """Base class for all qmemsim errors."""


class ArgumentError(QmemError, ValueError):
    """Bad argument to a kernel or device operation (indices, shapes, ranges)."""


class ResourceError(QmemError):
    """A configured resource budget (qubit count, router depth) was exceeded."""


class AddressError(QmemError):
    """Memory address outside the device's address space."""


class PolicyError(QmemError):
    """Operation forbidden by the device's configured policy."""


class StateError(QmemError):
    """Device is in the wrong state for the requested operation."""


class ConfigError(QmemError):
    """Inconsistent device or run configuration."""


class PostSelectionError(QmemError):
    """Post-selection on an outcome whose probability is (numerically) zero."""

    def __init__(self, message, probability):
        super().__init__(message)
        self.probability = probability


class ParseError(QmemError):
    """Source-level syntax error, with position information."""

    def __init__(self, message, line=None, column=None):
        pos = f" at line {line}" if line is not None else ""
        if line is not None and column is not None:
            pos = f" at line {line}, column {column}"
        super().__init__(message + pos)
        self.line = line
        self.column = column


class ValidationFailure(QmemError):
    """Raised when a program with error diagnostics is executed anyway."""

    def __init__(self, diagnostics):
        super().__init__(
            "program has %d validation error(s): %s"
            % (len(diagnostics), "; ".join(str(d) for d in diagnostics))
        )
        self.diagnostics = diagnostics


class ShotError(QmemError):
    """A runtime failure that aborts a single shot (bad address, failed post-selection)."""


class DatasetError(QmemError):
    """Malformed platform dataset; carries per-row diagnostics."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics

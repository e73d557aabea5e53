"""Exception and warning types raised by probcmb."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfRangeError(DomainError):
    """A strain amplitude cannot be inverted inside the supported life bracket."""

    def __init__(self, message, strain=None, index=None):
        super().__init__(message)
        self.strain = strain
        self.index = index


class SchemaError(ValueError):
    """An input file violates its column or value contract.

    ``line`` is the 1-based line number in the file when known.
    """

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class BootstrapError(RuntimeError):
    """Too many bootstrap replicate refits failed."""


class IllPosedWarning(UserWarning):
    """The campaign cannot identify all five strain-life parameters."""


class ExponentOrderWarning(UserWarning):
    """The plastic exponent decays slower than the elastic one (c > b)."""

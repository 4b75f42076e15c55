"""Exception types raised across the package."""


class CodymError(Exception):
    """Base class for all package errors."""


class ParseError(CodymError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    pass


class ValidationError(CodymError, ValueError):
    pass


class UnsupportedInputError(CodymError, ValueError):
    """Operation needs turn text but the corpus only carries word counts."""


class OrderMismatchError(CodymError, ValueError):
    pass


class EmptyModelError(CodymError, ValueError):
    """Nothing contributed weight to a model that must be nonempty."""


class InsufficientDataError(CodymError, ValueError):
    pass


class EnsembleError(CodymError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"replicate {index} failed: {cause!r}")

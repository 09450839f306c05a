"""Exception hierarchy shared across the package."""


class HsicTestError(Exception):
    """Base class for all package errors."""


class InvalidGridError(HsicTestError, ValueError):
    pass


class DimensionError(HsicTestError, ValueError):
    pass


class ConfigurationError(HsicTestError, ValueError):
    """Unresolvable kernel, preset, block-length or scenario settings."""


class DegenerateSampleError(HsicTestError, ValueError):
    """No positive bandwidth can be derived from the sample."""


class DataError(HsicTestError, ValueError):
    """Malformed input data; carries the offending row/column when known."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InsufficientSampleError(HsicTestError, ValueError):
    pass


class NumericalError(HsicTestError, ArithmeticError):
    pass

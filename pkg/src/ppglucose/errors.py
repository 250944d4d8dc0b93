"""Exception hierarchy shared across the pipeline.

Every error raised deliberately by the library derives from :class:`PpgError`.
The CLI maps the three families below onto exit codes:

* :class:`InputError` -> 2 (bad files, values, shapes, schemas)
* :class:`NumericError` -> 3 (rank or scale failures during fitting)
* :class:`ConfigError` -> 4
"""


class PpgError(Exception):
    """Base class for all library errors."""


class InputError(PpgError, ValueError):
    """Input data is malformed or violates a documented invariant."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderError(InputError):
    pass


class RangeError(InputError):
    pass


class DomainError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class InsufficientCyclesError(InsufficientDataError):
    def __init__(self, found, required):
        self.found = found
        self.required = required
        super().__init__(f"found {found} complete cycles, need at least {required}")


class ParamError(InputError):
    pass


class SplitError(InputError):
    pass


class SchemaError(InputError):
    pass


class ShapeError(InputError):
    pass


class NumericError(PpgError, ArithmeticError):
    """Fitting failed for numerical reasons."""


class RankError(NumericError):
    pass


class ScaleError(NumericError):
    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message)


class ConfigError(PpgError):
    pass

"""Exception hierarchy shared by all modules."""


class CircRegError(ValueError):
    """Base class for every error raised by circreg."""


class InvalidInputError(CircRegError):
    """Input violates a documented precondition."""


class EmptySampleError(CircRegError):
    """An operation that needs at least one observation received none."""


class UndefinedMeanError(CircRegError):
    """The mean resultant length is too small for a mean direction to exist."""

    def __init__(self, message, resultant_length):
        super().__init__(message)
        self.resultant_length = resultant_length


class DegenerateParameterError(CircRegError):
    """b2 == 0 collapses the Mobius map to a constant."""


class FitError(CircRegError):
    """Optimisation failed; ``diagnostics`` carries one entry per start."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class SchemaError(CircRegError):
    """A mapped CSV column is missing from the header."""

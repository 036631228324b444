"""Exception taxonomy shared by the library and the CLI exit-code mapping."""


class MiAnfisError(Exception):
    """Base class for all library errors."""


class ValidationError(MiAnfisError, ValueError):
    """Invalid argument, configuration, or domain precondition (CLI exit 2)."""


class DataError(MiAnfisError, ValueError):
    """Dataset content violates the data contract (CLI exit 3)."""


class FormatError(DataError):
    """File cannot be parsed or has an incompatible layout/version (CLI exit 3)."""


class InternalError(MiAnfisError, RuntimeError):
    """Inconsistent internal state, e.g. trace/model shape mismatch (CLI exit 4)."""

"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: user/precondition errors exit 1,
numerical failures exit 2, anything else (internal assertions) exit 3.
"""


class NilssonError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(NilssonError):
    """A documented precondition was violated (bad input, bad range, parse error)."""


class FieldMismatchError(PreconditionError):
    """Arithmetic attempted between elements of different number fields."""


class ParseError(PreconditionError):
    """A file or literal failed to parse; message carries position info when known."""


class NumericalFailure(NilssonError):
    """A numerical procedure failed: ill-conditioned fit, non-convergent quadrature."""


class UnsupportedStructure(PreconditionError):
    """Input is valid but outside the supported regime (repeated roots, ramified polygon)."""

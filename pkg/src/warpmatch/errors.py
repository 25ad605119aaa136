"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: format/I-O problems exit 1,
validation problems exit 2, numerical divergence exits 3.
"""


class WarpmatchError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(WarpmatchError):
    """A file is malformed: bad magic, bad header, truncation, bad values."""


class ValidationError(WarpmatchError, ValueError):
    """An input violates a precondition or invariant."""


class DivergenceError(WarpmatchError, ArithmeticError):
    """Training produced a non-finite loss or non-finite weights."""

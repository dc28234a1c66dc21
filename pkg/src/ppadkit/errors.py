"""Error types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, VerificationError -> 1,
BudgetExhausted -> 3. InternalError signals a bug and is never caught.
"""


class PpadkitError(Exception):
    """Base class for every error raised deliberately by this package."""


class InputError(PpadkitError, ValueError):
    """Malformed or out-of-contract input."""


class VerificationError(PpadkitError):
    """A computed object failed its post-hoc check."""


class BudgetExhausted(PpadkitError):
    """An iteration, pivot or enumeration budget ran out."""


class InternalError(PpadkitError, AssertionError):
    """An invariant that the construction guarantees was violated."""

"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ValidationError -> 1,
ResourceError -> 2.  NumericalError also exits 1 (it signals a violated
numeric contract, not an exhausted budget).
"""


class SkglassError(Exception):
    """Base class for all package errors."""


class ValidationError(SkglassError):
    """A precondition on inputs or configuration was violated."""


class ResourceError(SkglassError):
    """A memory budget or enumeration cap would be exceeded."""


class NumericalError(SkglassError):
    """A numeric self-check failed (non-convergence, lost PSD, identity drift)."""

"""Exception hierarchy shared by all attnsum modules.

The CLI maps these onto exit codes: ConfigError and argument problems
exit 1, everything else below AttnsumError exits 2.
"""


class AttnsumError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AttnsumError):
    """A bundle or parameter set violates one of its invariants."""


class FormatError(AttnsumError):
    """A byte stream is not a well-formed ATSB/ATSM file."""


class TruncationError(FormatError):
    """Declared sizes are inconsistent with the actual stream length."""


class DataError(AttnsumError):
    """Input data is unusable: non-finite tensors, missing labels or
    references, empty corpora."""


class ContractError(AttnsumError):
    """An operation was called with shapes or values that break its
    contract (programming error rather than bad data)."""


class ConfigError(AttnsumError):
    """A configuration value is outside its legal range."""

"""Exception types shared across the package.

Everything derives from ValueError so callers that do not care about the
distinction can catch one thing; the CLI maps any ChanRandError to exit
code 1.
"""


class ChanRandError(ValueError):
    """Base class for all input/domain errors raised by this package."""


class DomainError(ChanRandError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateVarianceError(ChanRandError):
    """A correlation estimate was requested on data with zero variance."""


class InsufficientDataError(ChanRandError):
    """Sequence shorter than the operation's minimum length."""


class InsufficientBudgetError(ChanRandError):
    """Adversary budget too small to cover even the zero-transition pair."""


class ScaleError(ChanRandError):
    """Problem size exceeds the supported enumeration scale."""


class InputError(ChanRandError):
    """Malformed file, config, or CLI input."""

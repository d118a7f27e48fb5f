"""Exception types shared across the package."""


class CrispError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(CrispError):
    """Rows of one matrix disagree in width, or two matrices disagree in d."""


class EmptyMatrix(CrispError):
    """A token matrix with zero rows."""


class NonFinite(CrispError):
    """A NaN or infinite component in an embedding."""


class EmptyCorpus(CrispError):
    """Batch scoring requested against an empty corpus."""


class InvalidFraction(CrispError):
    """Relative cluster fraction outside (0, 1]."""


class KTooLarge(CrispError):
    """More clusters requested than points available."""


class DegenerateBatch(CrispError):
    """A training batch with no negative signal."""


class NoJudgedQueries(CrispError):
    """Every query in a run was skipped for lack of positive judgments."""


class ParseError(CrispError):
    """Malformed input file; carries a location in the message."""

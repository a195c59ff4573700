"""Exception hierarchy shared by all ecocip modules."""


class EcocError(Exception):
    """Base class for every error raised by ecocip."""


class SizeLimitError(EcocError, ValueError):
    """A requested object would exceed a configured size guard."""


class GenerationError(EcocError):
    """Random codebook generation produced no valid draw."""


class EmptyCodebookError(EcocError, ValueError):
    """An operation would leave a codebook without columns."""


class DegenerateColumnError(EcocError, ValueError):
    """A codebook column does not split the data into two non-empty sides."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column} is degenerate on this dataset")


class InvalidPartitionError(EcocError):
    """Merged per-part clique covers do not form a valid cover."""


class PreconditionError(EcocError, ValueError):
    """Inputs violate an operation's documented precondition."""


class CapabilityError(EcocError):
    """The requested operation is not supported by the given learner kind."""


class FormatError(EcocError, ValueError):
    """A file could not be parsed."""

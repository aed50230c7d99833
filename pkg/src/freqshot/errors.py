"""Exception hierarchy shared by all freqshot modules.

Three branches map onto the CLI exit codes: UsageError -> 2,
DataError -> 3, NumericError -> 4.
"""


class FreqshotError(Exception):
    exit_code = 3


class UsageError(FreqshotError):
    """Invalid parameter or flag value."""

    exit_code = 2


class DataError(FreqshotError):
    """Malformed, inconsistent, or insufficient input data."""

    exit_code = 3


class NumericError(FreqshotError):
    """Degenerate numeric input (zero norms, non-finite values)."""

    exit_code = 4


# ingest
class MalformedRow(DataError): ...
class UnknownSplit(DataError): ...
class DuplicatePath(DataError): ...
class SplitOverlap(DataError): ...
class DecodeFailure(DataError): ...
class OddTarget(UsageError): ...


# colorspace
class OddDimension(DataError): ...


# dct
class BadBlockSize(UsageError): ...
class SizeMismatch(DataError): ...
class NotDivisible(DataError): ...


# freqcube
class OutOfRange(UsageError): ...
class EmptyGrid(DataError): ...
class SelectionTooLarge(UsageError): ...


# features
class EmptyCube(DataError): ...
class BranchMismatch(DataError): ...
class SingleClass(DataError): ...
class DimMismatch(DataError): ...


# fewshot
class NotEnoughClasses(DataError): ...
class NotEnoughItems(DataError): ...
class ZeroPrototype(NumericError): ...
class TooFewEpisodes(UsageError): ...


# featureio
class IoFailure(DataError): ...
class BadMagic(DataError): ...
class UnsupportedVersion(DataError): ...
class TruncatedFile(DataError): ...
class InvalidRecord(DataError): ...
class DuplicateId(DataError): ...
class ItemMismatch(DataError): ...
class LabelConflict(DataError): ...

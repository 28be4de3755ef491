"""Exception hierarchy.

Two broad families matter to the CLI exit-code contract: ``DataError``
(malformed or inconsistent input, exit code 2) and ``NumericalError``
(a computation that cannot proceed, exit code 3).
"""


class FeatcentError(Exception):
    """Base class for all library errors."""


class DataError(FeatcentError):
    """Malformed, inconsistent, or out-of-contract input data."""


class NumericalError(FeatcentError):
    """A numerical operation failed (degenerate or singular input)."""


# -- numerical ---------------------------------------------------------------

class ZeroVector(NumericalError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has (near-)zero norm and cannot be normalized")


class SingularCovariance(NumericalError):
    def __init__(self, id_label=None):
        self.id_label = id_label
        suffix = "" if id_label is None else f" for id {id_label}"
        super().__init__(f"regularized covariance failed factorization{suffix}")


# -- shape / alignment -------------------------------------------------------

class DimensionMismatch(DataError):
    pass


class UnknownId(DataError):
    def __init__(self, id_label):
        self.id_label = id_label
        super().__init__(f"no sample carries id {id_label}")


class TooFewSamples(DataError):
    pass


class Misalignment(DataError):
    pass


class EmptySet(DataError):
    pass


class NoValidQueries(DataError):
    pass


# -- pose --------------------------------------------------------------------

class DegeneratePose(DataError):
    pass


class MissingAnchor(DataError):
    pass


# -- file formats ------------------------------------------------------------

class FormatError(DataError):
    """Base for persistence-format violations; carries a location when known."""


class BadMagic(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class MetadataLengthMismatch(FormatError):
    pass


class HeaderMismatch(FormatError):
    pass


class RaggedRow(FormatError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"ragged row at line {line}")


class ParseError(FormatError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"parse error at line {line}")


class BadKeypointCount(FormatError):
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        super().__init__(f"record {name!r} has {count} keypoints, expected 18")
